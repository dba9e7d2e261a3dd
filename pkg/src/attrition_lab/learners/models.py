"""Trained-classifier artifacts with a uniform scoring contract."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, DatasetIntegrityError
from .ada import AdaLogReg, fit_ada_logreg
from .logreg import LogRegModel, fit_logreg
from .metrics import EvalReport, evaluate_scores
from .trees import TreeEnsemble, fit_gbt, fit_random_forest

KINDS = ("logreg", "random_forest", "gbt", "ada_logreg")


@dataclass
class ClassifierArtifact:
    kind: str
    hyperparameters: dict
    model: object
    registry_fingerprint: str
    seed: int = 0
    extra: dict = field(default_factory=dict)

    def predict_proba(self, matrix, ids=None) -> np.ndarray:
        if matrix.registry.fingerprint() != self.registry_fingerprint:
            raise DatasetIntegrityError("feature registry fingerprint differs from the trained model's")
        return np.clip(self.model.predict_proba(matrix.X(ids)), 0.0, 1.0)

    def parameters(self) -> dict:
        return self.model.to_params()

    def parameter_fingerprint(self) -> str:
        blob = json.dumps(self.parameters(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "hyperparameters": self.hyperparameters,
            "parameters": self.parameters(),
            "registry_fingerprint": self.registry_fingerprint,
            "seed": self.seed,
            "extra": self.extra,
        }

    @classmethod
    def from_json(cls, d) -> "ClassifierArtifact":
        kind = d["kind"]
        if kind == "logreg":
            model = LogRegModel.from_params(d["parameters"])
        elif kind == "ada_logreg":
            model = AdaLogReg.from_params(d["parameters"])
        elif kind in ("random_forest", "gbt"):
            model = TreeEnsemble.from_params(d["parameters"])
        else:
            raise ConfigError(f"unknown model kind {kind!r}")
        return cls(kind, d["hyperparameters"], model, d["registry_fingerprint"], d.get("seed", 0),
                   d.get("extra", {}))


def _xy(matrix, ids):
    return matrix.X(ids), matrix.y(ids)


def train_logreg(matrix, train_ids, l2_strength: float, **fit_kw) -> ClassifierArtifact:
    X, y = _xy(matrix, train_ids)
    model = fit_logreg(X, y, float(l2_strength), **fit_kw)
    return ClassifierArtifact("logreg", {"l2": float(l2_strength)}, model, matrix.registry.fingerprint())


def train_tree_ensemble(matrix, train_ids, kind: str, params=None, seed: int = 0) -> ClassifierArtifact:
    params = dict(params or {})
    X, y = _xy(matrix, train_ids)
    if kind == "random_forest":
        model = fit_random_forest(X, y, seed=seed, **params)
    elif kind == "gbt":
        model = fit_gbt(X, y, seed=seed, **params)
    else:
        raise ConfigError(f"not a tree ensemble kind: {kind!r}")
    hp = dict(params)
    if kind == "gbt":
        hp["n_trees_fitted"] = len(model.trees)
    return ClassifierArtifact(kind, hp, model, matrix.registry.fingerprint(), seed)


def train_ada_logreg(matrix, train_ids, stages: int, l2: float, **fit_kw) -> ClassifierArtifact:
    X, y = _xy(matrix, train_ids)
    model = fit_ada_logreg(X, y, int(stages), float(l2), **fit_kw)
    return ClassifierArtifact("ada_logreg", {"stages": int(stages), "l2": float(l2),
                                             "stages_fitted": len(model.stages)},
                              model, matrix.registry.fingerprint())


def train(matrix, train_ids, kind: str, hyperparameters: dict, seed: int = 0) -> ClassifierArtifact:
    """Dispatch on ``kind`` with a hyperparameter dict (as produced by tuning grids)."""
    hp = dict(hyperparameters)
    if kind == "logreg":
        return train_logreg(matrix, train_ids, hp["l2"])
    if kind == "ada_logreg":
        if "l2" not in hp:
            raise ConfigError("ada_logreg needs an l2 strength (normally the tuned plain-logreg value)")
        return train_ada_logreg(matrix, train_ids, hp.get("stages", 10), hp["l2"])
    if kind in ("random_forest", "gbt"):
        return train_tree_ensemble(matrix, train_ids, kind, hp, seed=seed)
    raise ConfigError(f"unknown model kind {kind!r}")


def evaluate(artifact: ClassifierArtifact, matrix, test_ids) -> EvalReport:
    """Test-set accuracy, F1 (threshold 0.5, positive = STEM graduate) and AUROC."""
    prob = artifact.predict_proba(matrix, test_ids)
    return evaluate_scores(prob, matrix.y(test_ids))
