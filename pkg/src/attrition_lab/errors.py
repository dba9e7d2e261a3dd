"""Exception hierarchy shared by every stage of the pipeline.

Each category maps to a distinct CLI exit code (see ``cli.EXIT_CODES``).
"""


class AttritionLabError(Exception):
    """Base class for all package errors."""

    category = "error"


class ConfigError(AttritionLabError, ValueError):
    """Invalid configuration or parameters."""

    category = "config"


class InvalidCatalogError(ConfigError):
    """A major catalog entry cannot be classified (e.g. no tracks)."""

    category = "config"


class DatasetIntegrityError(AttritionLabError, ValueError):
    """Input records contradict each other or reference unknown entities."""

    category = "dataset-integrity"


class NumericalError(AttritionLabError, ArithmeticError):
    """Non-finite values or undefined statistics during estimation."""

    category = "numerical"


class PreconditionError(AttritionLabError, RuntimeError):
    """A pipeline stage was invoked before its inputs were produced."""

    category = "precondition"
