"""Census-by-ZIP attributes and great-circle distance to campus."""

from __future__ import annotations

import math
import re
from typing import Mapping, Optional

import numpy as np

EARTH_RADIUS_KM = 6371.0
# University of Washington, Seattle campus
DEFAULT_CAMPUS = (47.6553, -122.3035)

_ZIP_RE = re.compile(r"^(\d{5})(?:-\d{4})?$")


def haversine_km(lat1, lon1, lat2, lon2, radius=EARTH_RADIUS_KM):
    """Great-circle distance in km; accepts scalars or numpy arrays (degrees)."""
    lat1, lon1, lat2, lon2 = map(np.radians, (lat1, lon1, lat2, lon2))
    dlat = lat2 - lat1
    dlon = lon2 - lon1
    a = np.sin(dlat / 2.0) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin(dlon / 2.0) ** 2
    return 2.0 * radius * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))


def normalize_zip(raw: Optional[str]) -> Optional[str]:
    """Five-digit ZIP, or None when missing or malformed."""
    if raw is None:
        return None
    m = _ZIP_RE.match(raw.strip())
    return m.group(1) if m else None


def lookup_zip(student, zip_table: Mapping):
    z = normalize_zip(student.application_zip)
    return zip_table.get(z) if z is not None else None


def zip_features(student, zip_table: Mapping, campus_coords=DEFAULT_CAMPUS, fallback=None):
    """``((avg_income, pct_hs, pct_college, distance_km), missing_flag)``.

    Students whose ZIP is missing, malformed or absent from the table get
    ``fallback`` (the cohort block means) and a missing flag of 1.
    """
    attrs = lookup_zip(student, zip_table)
    if attrs is None:
        if fallback is None:
            raise ValueError("a fallback is required for students without a usable ZIP")
        return tuple(float(v) for v in fallback), 1
    dist = float(haversine_km(attrs.latitude, attrs.longitude, *campus_coords))
    return (attrs.avg_income, attrs.pct_hs_grads, attrs.pct_college_grads, dist), 0


def zip_block_means(students, zip_table: Mapping, campus_coords=DEFAULT_CAMPUS) -> tuple:
    """Cohort means of the four ZIP features over students with a usable ZIP."""
    rows = []
    for s in students:
        attrs = lookup_zip(s, zip_table)
        if attrs is not None:
            rows.append((attrs.avg_income, attrs.pct_hs_grads, attrs.pct_college_grads,
                         float(haversine_km(attrs.latitude, attrs.longitude, *campus_coords))))
    if not rows:
        return (0.0, 0.0, 0.0, 0.0)
    return tuple(math.fsum(col) / len(rows) for col in zip(*rows))
