"""Discrete adaptive boosting with logistic-regression weak learners."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from ..errors import ConfigError
from .logreg import LogRegModel, fit_logreg, standardizer


@dataclass
class AdaLogReg:
    """Stage weights come from each learner's weighted 0/1 error at threshold 0.5.

    Scoring averages the learners' log-odds weighted by stage weight, so a
    single-stage model reproduces plain logistic regression. A stage with zero
    weighted error (``dominant``) is used on its own.
    """

    stages: list = field(default_factory=list)
    alphas: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    dominant: int = -1

    def predict_proba(self, X) -> np.ndarray:
        if self.dominant >= 0:
            return self.stages[self.dominant].predict_proba(X)
        total = sum(self.alphas)
        score = sum(a * m.decision_function(X) for a, m in zip(self.alphas, self.stages))
        return expit(score / total)

    def to_params(self) -> dict:
        return {"stages": [m.to_params() for m in self.stages], "alphas": list(self.alphas),
                "errors": list(self.errors), "dominant": self.dominant}

    @classmethod
    def from_params(cls, p) -> "AdaLogReg":
        return cls([LogRegModel.from_params(m) for m in p["stages"]], list(p["alphas"]),
                   list(p["errors"]), int(p["dominant"]))


def fit_ada_logreg(X, y, stages: int, l2: float, **fit_kw) -> AdaLogReg:
    if stages < 1:
        raise ConfigError("ada-boost needs at least one stage")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    std = standardizer(X)
    w = np.full(len(y), 1.0 / len(y))
    sign = np.where(y == 1, 1.0, -1.0)
    model = AdaLogReg()
    for m in range(stages):
        learner = fit_logreg(X, y, l2, sample_weight=w, standardize=std, **fit_kw)
        pred = learner.predict_proba(X) >= 0.5
        err = float(np.sum(w[pred != (y == 1)]))
        if err >= 0.5:
            if m == 0:
                model.stages.append(learner)
                model.alphas.append(1.0)
                model.errors.append(err)
            break
        model.stages.append(learner)
        model.errors.append(err)
        if err <= 0.0:
            model.alphas.append(1.0)
            model.dominant = len(model.stages) - 1
            break
        alpha = 0.5 * math.log((1.0 - err) / err)
        model.alphas.append(alpha)
        w = w * np.exp(-alpha * sign * np.where(pred, 1.0, -1.0))
        w /= w.sum()
    return model
