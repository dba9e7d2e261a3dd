"""Threshold metrics and ROC analysis."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import NumericalError

THRESHOLD = 0.5


@dataclass
class EvalReport:
    accuracy: float
    auroc: float
    f1: float
    roc_points: list = field(default_factory=list)  # (fpr, tpr) pairs
    confusion: dict = field(default_factory=dict)
    n: int = 0

    def to_json(self) -> dict:
        d = asdict(self)
        d["roc_points"] = [[float(x), float(y)] for x, y in self.roc_points]
        return d


def roc_counts(scores, labels):
    """Cumulative (false positive, true positive) counts at each distinct score, high to low.

    Equal scores are merged into one step. Both arrays start at 0.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(bool)
    order = np.argsort(-scores, kind="mergesort")
    s = scores[order]
    y = labels[order]
    tp = np.cumsum(y)
    fp = np.cumsum(~y)
    last_of_run = np.r_[s[1:] != s[:-1], True]
    return np.r_[0, fp[last_of_run]], np.r_[0, tp[last_of_run]]


def roc_curve(scores, labels) -> list:
    fp, tp = roc_counts(scores, labels)
    n_neg, n_pos = fp[-1], tp[-1]
    if n_pos == 0 or n_neg == 0:
        raise NumericalError("ROC is undefined for a single-class label set")
    return list(zip((fp / n_neg).tolist(), (tp / n_pos).tolist()))


def trapezoid_area(points) -> float:
    pts = np.asarray(points, dtype=float)
    x, y = pts[:, 0], pts[:, 1]
    return float(np.sum((x[1:] - x[:-1]) * (y[1:] + y[:-1])) / 2.0)


def auroc(scores, labels) -> float:
    """Area under the tie-merged ROC by the trapezoid rule (integer arithmetic until the last step)."""
    fp, tp = roc_counts(scores, labels)
    n_neg, n_pos = int(fp[-1]), int(tp[-1])
    if n_pos == 0 or n_neg == 0:
        raise NumericalError("AUROC is undefined for a single-class label set")
    twice_area = int(np.sum((fp[1:] - fp[:-1]).astype(np.int64) * (tp[1:] + tp[:-1]).astype(np.int64)))
    return twice_area / (2.0 * n_pos * n_neg)


def confusion(prob, labels, threshold=THRESHOLD) -> dict:
    pred = np.asarray(prob) >= threshold
    y = np.asarray(labels).astype(bool)
    return {
        "tp": int(np.sum(pred & y)),
        "fp": int(np.sum(pred & ~y)),
        "tn": int(np.sum(~pred & ~y)),
        "fn": int(np.sum(~pred & y)),
    }


def accuracy_f1(prob, labels, threshold=THRESHOLD):
    c = confusion(prob, labels, threshold)
    n = sum(c.values())
    acc = (c["tp"] + c["tn"]) / n if n else 0.0
    denom = 2 * c["tp"] + c["fp"] + c["fn"]
    f1 = 2 * c["tp"] / denom if denom else 0.0
    return acc, f1, c


def evaluate_scores(prob, labels, threshold=THRESHOLD) -> EvalReport:
    """Accuracy and F1 at ``threshold`` (positive class = 1) plus the ROC and its area."""
    prob = np.asarray(prob, dtype=float)
    labels = np.asarray(labels).astype(int)
    acc, f1, c = accuracy_f1(prob, labels, threshold)
    return EvalReport(acc, auroc(prob, labels), f1, roc_curve(prob, labels), c, int(len(labels)))
