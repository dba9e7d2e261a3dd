"""Train/test split and cross-validation folds."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError

TEST_FRACTION = 0.2
N_FOLDS = 10
MIN_COHORT = 50


@dataclass
class SplitPlan:
    seed: int
    train_ids: list
    test_ids: list
    folds: dict = field(default_factory=dict)  # train id -> fold 1..n_folds
    stratified: bool = True

    @property
    def n_folds(self) -> int:
        return max(self.folds.values()) if self.folds else 0

    def fold_ids(self, k: int):
        """(fit ids, validation ids) for fold ``k`` (1-based)."""
        fit = [i for i in self.train_ids if self.folds[i] != k]
        val = [i for i in self.train_ids if self.folds[i] == k]
        return fit, val

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "stratified": self.stratified,
            "train_ids": list(self.train_ids),
            "test_ids": list(self.test_ids),
            "folds": {k: self.folds[k] for k in self.train_ids},
        }

    @classmethod
    def from_json(cls, d) -> "SplitPlan":
        return cls(d["seed"], list(d["train_ids"]), list(d["test_ids"]),
                   {k: int(v) for k, v in d["folds"].items()}, d.get("stratified", True))


def _allocate(sizes, total):
    """Largest-remainder apportionment of ``total`` across groups proportional to ``sizes``."""
    n = sum(sizes)
    exact = [total * s / n for s in sizes]
    base = [int(np.floor(e)) for e in exact]
    order = sorted(range(len(sizes)), key=lambda i: (-(exact[i] - base[i]), i))
    for i in order[: total - sum(base)]:
        base[i] += 1
    return base


def make_split(cohort_ids, seed: int, labels=None, stratify: bool = True,
               test_fraction: float = TEST_FRACTION, n_folds: int = N_FOLDS) -> SplitPlan:
    """Deterministic 80/20 split with ``n_folds`` folds over the training part.

    The cohort is sorted before shuffling, so input order does not matter. With
    ``labels`` (mapping or sequence aligned to ``cohort_ids``) and ``stratify``,
    each class is split in proportion. Test size is ``round(test_fraction * n)``.
    """
    ids = sorted(cohort_ids)
    if len(ids) < MIN_COHORT:
        raise ConfigError(f"cohort too small to split ({len(ids)} < {MIN_COHORT})")
    if labels is not None and not isinstance(labels, dict):
        labels = dict(zip(cohort_ids, labels))
    if labels is not None:
        classes = sorted({int(labels[i]) for i in ids})
        if len(classes) < 2:
            raise ConfigError("single-class cohort cannot be split for evaluation")
    rng = np.random.Generator(np.random.Philox(seed))
    n_test = int(round(test_fraction * len(ids)))
    if labels is not None and stratify:
        groups = [[i for i in ids if int(labels[i]) == c] for c in classes]
    else:
        groups = [ids]
    groups = [[g[j] for j in rng.permutation(len(g))] for g in groups]
    test_sizes = _allocate([len(g) for g in groups], n_test)
    test, train_groups = [], []
    for g, k in zip(groups, test_sizes):
        test += g[:k]
        train_groups.append(g[k:])
    folds = {}
    pos = 0
    for g in train_groups:  # class-wise round robin keeps folds stratified and balanced
        for sid in g:
            folds[sid] = pos % n_folds + 1
            pos += 1
    train = sorted(folds)
    return SplitPlan(seed, train, sorted(test), folds, bool(labels is not None and stratify))
