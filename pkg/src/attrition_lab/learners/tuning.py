"""Hyperparameter selection by k-fold cross-validated AUROC."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError
from .metrics import auroc
from .models import train

DEFAULT_GRIDS = {
    "logreg": {"l2": list(np.logspace(-3, 2, 7))},
    "random_forest": {"max_depth": [4, 8, 16, None], "n_trees": [200]},
    "gbt": {"max_depth": [2, 3, 4], "learning_rate": [0.05, 0.1, 0.3], "n_trees": [500]},
    # the weak-learner strength is normally injected from the tuned plain logreg
    "ada_logreg": {"stages": [10]},
}


def expand_grid(grid) -> list:
    """A dict of lists becomes the list of all combinations; a list of dicts passes through."""
    if isinstance(grid, dict):
        keys = sorted(grid)
        points = [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]
    else:
        points = [dict(p) for p in grid]
    for p in points:
        for k, v in p.items():
            if isinstance(v, np.generic):
                p[k] = v.item()
    return points


def capacity_key(kind: str, point: dict) -> tuple:
    """Smaller = simpler model; used to break ties toward regularization / low capacity."""
    inf = math.inf
    if kind in ("logreg", "ada_logreg"):
        return (-point.get("l2", 0.0), point.get("stages", 1))
    depth = point.get("max_depth", None)
    depth = inf if depth is None else depth
    return (depth, point.get("n_trees", 0), point.get("learning_rate", 0.0))


@dataclass
class TuneResult:
    kind: str
    best: dict
    points: list
    fold_auroc: list  # per point: list of per-fold AUROC
    mean_auroc: list
    fold_predictions: list = field(default_factory=list)  # per point, per fold: (ids, labels, probs)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "best": self.best,
            "grid": [
                {"point": p, "mean_auroc": m, "fold_auroc": f}
                for p, m, f in zip(self.points, self.mean_auroc, self.fold_auroc)
            ],
        }


def tune(matrix, split, kind: str, grid=None, seed: int = 0, workers: int = 1,
         keep_predictions: bool = True) -> TuneResult:
    """Pick the grid point with the highest mean validation AUROC over the split's folds."""
    points = expand_grid(grid if grid is not None else DEFAULT_GRIDS[kind])
    if not points:
        raise ConfigError("hyperparameter grid is empty")
    folds = list(range(1, split.n_folds + 1))
    fold_sets = {k: split.fold_ids(k) for k in folds}

    def run(task):
        pi, k = task
        fit_ids, val_ids = fold_sets[k]
        art = train(matrix, fit_ids, kind, points[pi], seed=seed)
        prob = art.predict_proba(matrix, val_ids)
        y = matrix.y(val_ids)
        return auroc(prob, y), (list(val_ids), y, prob)

    tasks = [(pi, k) for pi in range(len(points)) for k in folds]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(run, tasks))
    else:
        results = [run(t) for t in tasks]

    fold_auroc, preds = [], []
    for pi in range(len(points)):
        chunk = results[pi * len(folds):(pi + 1) * len(folds)]
        fold_auroc.append([a for a, _ in chunk])
        preds.append([p for _, p in chunk] if keep_predictions else [])
    means = [math.fsum(a) / len(a) for a in fold_auroc]
    best_i = min(range(len(points)), key=lambda i: (-means[i], capacity_key(kind, points[i]), i))
    return TuneResult(kind, points[best_i], points, fold_auroc, means, preds)
