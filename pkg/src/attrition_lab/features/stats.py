"""Per-offering grade statistics and the five-number "performance" summary."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

PASSING_FLOOR = 0.7
EMPTY_PERFORMANCE = (0.0, 0.0, 0.0, 0.0, 50.0)
PERFORMANCE_FIELDS = ("count", "credits", "gpa", "z", "pct")


@dataclass(frozen=True)
class OfferingStats:
    """Numeric-grade statistics of one course offering (course in one quarter)."""

    key: tuple  # (prefix, number, quarter index)
    mean_grade: float
    std_grade: float  # population standard deviation
    max_grade: float
    grades: tuple  # sorted numeric grades

    @property
    def size(self) -> int:
        return len(self.grades)


def offering_key(entry) -> tuple:
    return (entry.course_prefix, entry.course_number, entry.quarter.index)


def offering_stats(transcripts: Iterable) -> dict:
    """Map offering key -> OfferingStats over numeric grades; offerings without any are absent."""
    grades = {}
    for entry in transcripts:
        if entry.grade.is_numeric:
            grades.setdefault(offering_key(entry), []).append(entry.grade.value)
    out = {}
    for key, values in grades.items():
        values.sort()
        n = len(values)
        if values[0] == values[-1]:  # fsum / n can miss the value by an ulp
            mean, var = values[0], 0.0
        else:
            mean = math.fsum(values) / n
            var = math.fsum((v - mean) ** 2 for v in values) / n
        out[key] = OfferingStats(key, mean, math.sqrt(var), values[-1], tuple(values))
    return out


def grade_transforms(entry, stats: Mapping) -> Optional[tuple]:
    """``(z_score, percentile)`` of a numeric grade within its offering, or None if not numeric.

    Percentile uses midranks: 100 * (below + equal / 2) / n.
    """
    if not entry.grade.is_numeric:
        return None
    st = stats[offering_key(entry)]
    g = entry.grade.value
    z = 0.0 if st.std_grade == 0.0 else (g - st.mean_grade) / st.std_grade
    lo = bisect.bisect_left(st.grades, g)
    hi = bisect.bisect_right(st.grades, g)
    pct = 100.0 * (lo + 0.5 * (hi - lo)) / st.size
    return z, pct


def is_credit_earning(entry) -> bool:
    g = entry.grade
    return g.kind == "pass" or (g.is_numeric and g.value >= PASSING_FLOOR)


def performance_block(entries: Sequence, stats: Mapping) -> tuple:
    """(course count, credits earned, mean GPA, mean z, mean percentile) for one scope.

    GPA, z and percentile average the numeric grades only, unweighted by credits.
    An empty scope, or one without numeric grades, reports 0 / 0 / 50 for those three.
    """
    if not entries:
        return EMPTY_PERFORMANCE
    credits = math.fsum(e.credits for e in entries if is_credit_earning(e))
    gpas, zs, pcts = [], [], []
    for e in entries:
        t = grade_transforms(e, stats)
        if t is None:
            continue
        gpas.append(e.grade.value)
        zs.append(t[0])
        pcts.append(t[1])
    if not gpas:
        return (float(len(entries)), credits, 0.0, 0.0, 50.0)
    n = len(gpas)
    return (float(len(entries)), credits, math.fsum(gpas) / n, math.fsum(zs) / n, math.fsum(pcts) / n)
