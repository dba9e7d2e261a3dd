"""One-feature-at-a-time logistic regressions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .metrics import accuracy_f1, auroc

NEWTON_ITERS = 50
RIDGE = 1e-8


@dataclass
class ScanRow:
    feature: str
    index: int
    accuracy: float
    auroc: float
    f1: float
    slope: float
    intercept: float
    constant: bool
    rank: int = 0


def fit_univariate(X, y, iters: int = NEWTON_ITERS, ridge: float = RIDGE):
    """Intercept + slope logistic fits for every column of ``X`` at once (Newton's method).

    Columns are standardized with their own mean/std; constant columns keep slope 0.
    Returns (intercepts, slopes) on the standardized scale plus (mean, scale).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    const = scale == 0
    scale = np.where(const, 1.0, scale)
    Z = (X - mean) / scale
    n, d = Z.shape
    rate = np.clip(y.mean(), 1e-12, 1 - 1e-12)
    b = np.full(d, np.log(rate / (1 - rate)))
    a = np.zeros(d)
    for _ in range(iters):
        p = expit(b + a * Z)
        r = p - y[:, None]
        wgt = p * (1 - p)
        gb = r.sum(axis=0)
        ga = (r * Z).sum(axis=0) + ridge * n * a
        hbb = wgt.sum(axis=0) + 1e-12
        hab = (wgt * Z).sum(axis=0)
        haa = (wgt * Z * Z).sum(axis=0) + ridge * n
        det = hbb * haa - hab * hab
        det = np.where(np.abs(det) < 1e-300, 1e-300, det)
        db = (haa * gb - hab * ga) / det
        da = (hbb * ga - hab * gb) / det
        da[const] = 0.0
        db[const] = (gb / hbb)[const]
        b -= db
        a -= da
        if max(np.max(np.abs(da)), np.max(np.abs(db))) < 1e-12:
            break
    return b, a, mean, scale, const


def single_feature_scan(matrix, split, chunk: int = 256) -> list:
    """Rank every feature by the test AUROC of its univariate logistic regression.

    Trained on the split's training rows, evaluated on its test rows. Constant
    features are flagged and recorded with AUROC 0.5.
    """
    Xtr, ytr = matrix.X(split.train_ids), matrix.y(split.train_ids)
    Xte, yte = matrix.X(split.test_ids), matrix.y(split.test_ids)
    names = matrix.registry.names
    rows = []
    for lo in range(0, Xtr.shape[1], chunk):
        hi = min(lo + chunk, Xtr.shape[1])
        b, a, mean, scale, const = fit_univariate(Xtr[:, lo:hi], ytr)
        prob = expit(b + a * (Xte[:, lo:hi] - mean) / scale)
        for j in range(hi - lo):
            acc, f1, _ = accuracy_f1(prob[:, j], yte)
            area = 0.5 if const[j] else auroc(prob[:, j], yte)
            rows.append(ScanRow(names[lo + j], lo + j, acc, area, f1, float(a[j] / scale[j]),
                                float(b[j] - a[j] * mean[j] / scale[j]), bool(const[j])))
    rows.sort(key=lambda r: (-r.auroc, r.index))
    for rank, r in enumerate(rows, start=1):
        r.rank = rank
    return rows
