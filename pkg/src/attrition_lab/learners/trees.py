"""Random forests and gradient-boosted trees.

Fitting is delegated to scikit-learn's CART implementation; the fitted trees
are exported to plain arrays and scored by :class:`TreeEnsemble`, which is
also what model.json round-trips.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit
from sklearn.ensemble import GradientBoostingClassifier, RandomForestClassifier

from ..errors import ConfigError

RF_DEFAULTS = {"n_trees": 200, "max_depth": None, "max_features": "sqrt", "bootstrap": True,
               "min_samples_leaf": 1}
GBT_DEFAULTS = {"n_trees": 500, "max_depth": 3, "learning_rate": 0.1, "n_iter_no_change": 10,
                "validation_fraction": 0.1, "min_samples_leaf": 1}


@dataclass
class Tree:
    """Binary tree in array form: ``x[feature] <= threshold`` goes left; leaves have feature -1."""

    left: np.ndarray
    right: np.ndarray
    feature: np.ndarray
    threshold: np.ndarray
    value: np.ndarray

    @classmethod
    def constant(cls, value: float) -> "Tree":
        return cls(np.array([-1]), np.array([-1]), np.array([-1]), np.array([0.0]), np.array([float(value)]))

    @classmethod
    def from_sklearn(cls, tree_, value) -> "Tree":
        return cls(tree_.children_left.copy(), tree_.children_right.copy(), tree_.feature.copy(),
                   tree_.threshold.copy(), np.asarray(value, dtype=float).copy())

    def apply(self, X32) -> np.ndarray:
        node = np.zeros(X32.shape[0], dtype=np.int64)
        rows = np.arange(X32.shape[0])
        while True:
            feat = self.feature[node]
            internal = feat >= 0
            if not internal.any():
                return node
            idx = rows[internal]
            n = node[internal]
            go_left = X32[idx, feat[internal]] <= self.threshold[n]
            node[idx] = np.where(go_left, self.left[n], self.right[n])

    def predict(self, X32) -> np.ndarray:
        return self.value[self.apply(X32)]

    def to_params(self) -> dict:
        return {k: getattr(self, k).tolist() for k in ("left", "right", "feature", "threshold", "value")}

    @classmethod
    def from_params(cls, p) -> "Tree":
        return cls(np.array(p["left"], dtype=np.int64), np.array(p["right"], dtype=np.int64),
                   np.array(p["feature"], dtype=np.int64), np.array(p["threshold"], dtype=float),
                   np.array(p["value"], dtype=float))


@dataclass
class TreeEnsemble:
    """``kind='random_forest'``: mean of leaf positive rates.
    ``kind='gbt'``: sigmoid(init + learning_rate * sum of leaf values)."""

    kind: str
    trees: list = field(default_factory=list)
    init: float = 0.0
    learning_rate: float = 1.0

    def predict_proba(self, X) -> np.ndarray:
        # sklearn compares float32 features against float64 thresholds
        X32 = np.asarray(X, dtype=np.float32)
        total = np.zeros(X32.shape[0])
        for t in self.trees:
            total += t.predict(X32)
        if self.kind == "random_forest":
            return total / len(self.trees)
        return expit(self.init + self.learning_rate * total)

    def to_params(self) -> dict:
        return {"kind": self.kind, "init": self.init, "learning_rate": self.learning_rate,
                "trees": [t.to_params() for t in self.trees]}

    @classmethod
    def from_params(cls, p) -> "TreeEnsemble":
        return cls(p["kind"], [Tree.from_params(t) for t in p["trees"]], p["init"], p["learning_rate"])


def _check(params):
    if int(params["n_trees"]) <= 0:
        raise ConfigError("tree count must be positive")
    depth = params["max_depth"]
    if depth is not None and int(depth) < 0:
        raise ConfigError("tree depth must be >= 0 (or None for unlimited)")


def fit_random_forest(X, y, seed: int = 0, **params) -> TreeEnsemble:
    p = {**RF_DEFAULTS, **params}
    _check(p)
    y = np.asarray(y, dtype=int)
    if p["max_depth"] == 0:
        # a depth-0 tree is a single leaf: the training base rate
        return TreeEnsemble("random_forest", [Tree.constant(y.mean())] * int(p["n_trees"]))
    rf = RandomForestClassifier(
        n_estimators=int(p["n_trees"]), max_depth=p["max_depth"], max_features=p["max_features"],
        bootstrap=bool(p["bootstrap"]), min_samples_leaf=int(p["min_samples_leaf"]),
        random_state=seed, n_jobs=1,
    ).fit(X, y)
    trees = []
    pos = list(rf.classes_).index(1) if 1 in rf.classes_ else None
    for est in rf.estimators_:
        v = est.tree_.value[:, 0, :]
        frac = v / v.sum(axis=1, keepdims=True)
        trees.append(Tree.from_sklearn(est.tree_, frac[:, pos] if pos is not None else np.zeros(len(v))))
    return TreeEnsemble("random_forest", trees)


def fit_gbt(X, y, seed: int = 0, **params) -> TreeEnsemble:
    p = {**GBT_DEFAULTS, **params}
    _check(p)
    y = np.asarray(y, dtype=int)
    rate = float(np.clip(y.mean(), 1e-12, 1 - 1e-12))
    init = float(np.log(rate / (1.0 - rate)))
    if p["max_depth"] == 0:
        # constant trees fit the mean residual, which is zero at the base-rate start
        return TreeEnsemble("gbt", [Tree.constant(0.0)], init, float(p["learning_rate"]))
    gb = GradientBoostingClassifier(
        loss="log_loss", n_estimators=int(p["n_trees"]), learning_rate=float(p["learning_rate"]),
        max_depth=p["max_depth"], min_samples_leaf=int(p["min_samples_leaf"]), subsample=1.0,
        n_iter_no_change=p["n_iter_no_change"], validation_fraction=float(p["validation_fraction"]),
        random_state=seed,
    ).fit(X, y)
    # the prior is fit on sklearn's internal training subset when early stopping holds rows out
    prior = float(np.clip(gb.init_.class_prior_[list(gb.init_.classes_).index(1)], 1e-12, 1 - 1e-12))
    init = float(np.log(prior / (1.0 - prior)))
    trees = [Tree.from_sklearn(est.tree_, est.tree_.value[:, 0, 0]) for est in gb.estimators_[:, 0]]
    return TreeEnsemble("gbt", trees, init, float(p["learning_rate"]))
