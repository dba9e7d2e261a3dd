"""Modeling and predicting undergraduate attrition from STEM fields using registrar-style data."""

__version__ = "0.1.0"
