"""Supervised prediction of STEM graduation from first-year features."""

from .ada import AdaLogReg, fit_ada_logreg
from .logreg import LogRegModel, fit_logreg, loss_grad
from .metrics import EvalReport, auroc, evaluate_scores, roc_curve, trapezoid_area
from .models import (
    KINDS,
    ClassifierArtifact,
    evaluate,
    train,
    train_ada_logreg,
    train_logreg,
    train_tree_ensemble,
)
from .scan import ScanRow, single_feature_scan
from .split import SplitPlan, make_split
from .trees import TreeEnsemble, fit_gbt, fit_random_forest
from .tuning import DEFAULT_GRIDS, TuneResult, expand_grid, tune

__all__ = [
    "AdaLogReg", "ClassifierArtifact", "DEFAULT_GRIDS", "EvalReport", "KINDS", "LogRegModel",
    "ScanRow", "SplitPlan", "TreeEnsemble", "TuneResult", "auroc", "evaluate", "evaluate_scores",
    "expand_grid", "fit_ada_logreg", "fit_gbt", "fit_logreg", "fit_random_forest", "loss_grad",
    "make_split", "roc_curve", "single_feature_scan", "train", "train_ada_logreg", "train_logreg",
    "train_tree_ensemble", "trapezoid_area", "tune",
]
