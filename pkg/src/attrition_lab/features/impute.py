"""Regression imputation of missing SAT / ACT scores."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .registry import CATEGORICAL_FIELDS

log = logging.getLogger(__name__)

SCORE_RANGES = {"sat": (400.0, 1600.0), "act": (1.0, 36.0)}
MIN_COMPLETE_CASES = 30
_ATTR = {"sat": "sat_score", "act": "act_score"}


@dataclass
class ImputationResult:
    students: list
    imputed: dict = field(default_factory=dict)  # score -> set of student ids
    method: dict = field(default_factory=dict)  # score -> "none" | "ols" | "mean" | "midpoint"


def _base_design(students) -> np.ndarray:
    cols = [np.ones(len(students))]
    for _, attr, levels in CATEGORICAL_FIELDS:
        values = [getattr(s, attr) for s in students]
        for lvl in levels:
            cols.append(np.array([v == lvl for v in values], dtype=float))
    gpa = np.array([np.nan if s.hs_gpa is None else s.hs_gpa for s in students])
    gpa_missing = np.isnan(gpa)
    fill = np.nanmean(gpa) if (~gpa_missing).any() else 0.0
    cols.append(np.where(gpa_missing, fill, gpa))
    cols.append(gpa_missing.astype(float))
    return np.column_stack(cols)


def _fit(X, y):
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    return coef


def impute_scores(students, min_complete: int = MIN_COMPLETE_CASES) -> ImputationResult:
    """Fill missing SAT and ACT by least squares on demographics, high-school GPA and the other score.

    Two models are fit per score: one that also uses the other score (applied
    when the student has it), one without. Predictions are clamped to the
    legal range and rounded to whole points. With fewer than ``min_complete``
    complete cases the score falls back to its observed mean.
    """
    students = list(students)
    if not students:
        return ImputationResult([], {"sat": set(), "act": set()}, {"sat": "none", "act": "none"})
    base = _base_design(students)
    observed = {
        k: np.array([np.nan if getattr(s, a) is None else float(getattr(s, a)) for s in students])
        for k, a in _ATTR.items()
    }
    filled = {k: v.copy() for k, v in observed.items()}
    result = ImputationResult(students, {}, {})

    for score, other in (("sat", "act"), ("act", "sat")):
        y = observed[score]
        y_ok = ~np.isnan(y)
        other_ok = ~np.isnan(observed[other])
        missing = ~y_ok
        result.imputed[score] = {students[i].student_id for i in np.flatnonzero(missing)}
        lo, hi = SCORE_RANGES[score]
        if not missing.any():
            result.method[score] = "none"
            continue
        if y_ok.sum() >= min_complete:
            coef = _fit(base[y_ok], y[y_ok])
            pred = base @ coef
            with_other = y_ok & other_ok
            if with_other.sum() >= min_complete:
                X2 = np.column_stack([base, np.nan_to_num(observed[other])])
                coef2 = _fit(X2[with_other], y[with_other])
                pred = np.where(other_ok, X2 @ coef2, pred)
            result.method[score] = "ols"
        elif y_ok.any():
            log.warning("only %d complete cases for %s; using mean imputation", int(y_ok.sum()), score)
            pred = np.full(len(students), np.nanmean(y))
            result.method[score] = "mean"
        else:
            log.warning("no observed %s scores; imputing the range midpoint", score)
            pred = np.full(len(students), (lo + hi) / 2.0)
            result.method[score] = "midpoint"
        filled[score] = np.where(missing, np.rint(np.clip(pred, lo, hi)), y)

    result.students = [
        replace(s, sat_score=int(filled["sat"][i]), act_score=int(filled["act"][i]))
        for i, s in enumerate(students)
    ]
    return result
