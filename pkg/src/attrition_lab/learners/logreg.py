"""L2-regularized logistic regression on standardized features."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit

from ..errors import ConfigError, NumericalError

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 5000


def standardizer(X):
    """Column means and scales from the given (training) rows; constant columns get scale 1."""
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    return mean, scale


def loss_grad(theta, Xs, y, l2, sample_weight=None):
    """Weighted mean logistic loss + (l2 / 2) * |w|^2 and its gradient.

    ``theta = [intercept, w...]``; the intercept is not penalized. Sample
    weights are normalized to sum to one (uniform when None).
    """
    n = Xs.shape[0]
    s = np.full(n, 1.0 / n) if sample_weight is None else sample_weight / sample_weight.sum()
    b, w = theta[0], theta[1:]
    z = Xs @ w + b
    # log(1 + e^z) - y z, computed stably
    loss = float(np.dot(s, np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * np.dot(w, w))
    r = s * (expit(z) - y)
    grad = np.empty_like(theta)
    grad[0] = r.sum()
    grad[1:] = Xs.T @ r + l2 * w
    return loss, grad


@dataclass
class LogRegModel:
    mean: np.ndarray
    scale: np.ndarray
    coef: np.ndarray
    intercept: float
    l2: float
    converged: bool = True
    n_iter: int = 0
    grad_max: float = 0.0

    def decision_function(self, X) -> np.ndarray:
        return ((np.asarray(X, dtype=float) - self.mean) / self.scale) @ self.coef + self.intercept

    def predict_proba(self, X) -> np.ndarray:
        return expit(self.decision_function(X))

    def to_params(self) -> dict:
        return {
            "mean": self.mean.tolist(), "scale": self.scale.tolist(), "coef": self.coef.tolist(),
            "intercept": float(self.intercept), "l2": self.l2, "converged": self.converged,
            "n_iter": self.n_iter, "grad_max": self.grad_max,
        }

    @classmethod
    def from_params(cls, p) -> "LogRegModel":
        return cls(np.array(p["mean"]), np.array(p["scale"]), np.array(p["coef"]), p["intercept"],
                   p["l2"], p.get("converged", True), p.get("n_iter", 0), p.get("grad_max", 0.0))


def _gradient_descent(fun, theta, lipschitz, tol, max_iter):
    """Nesterov-accelerated full-batch gradient descent with adaptive restart."""
    step = 1.0 / lipschitz
    prev = theta.copy()
    y = theta.copy()
    t = 1.0
    f_prev = np.inf
    for it in range(1, max_iter + 1):
        f, g = fun(y)
        theta = y - step * g
        f_new, g_new = fun(theta)
        if np.max(np.abs(g_new)) < tol:
            return theta, it, g_new
        if f_new > f_prev:  # restart momentum
            t = 1.0
            y = theta.copy()
        else:
            t_next = (1.0 + np.sqrt(1.0 + 4.0 * t * t)) / 2.0
            y = theta + ((t - 1.0) / t_next) * (theta - prev)
            t = t_next
        prev = theta
        f_prev = f_new
    return theta, max_iter, fun(theta)[1]


def fit_logreg(X, y, l2: float, sample_weight=None, solver: str = "lbfgs",
               tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER, standardize=None) -> LogRegModel:
    """Minimize the regularized logistic loss from a zero start (deterministic)."""
    if l2 < 0:
        raise ConfigError("l2 strength must be non-negative")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    mean, scale = standardize if standardize is not None else standardizer(X)
    Xs = (X - mean) / scale
    sw = None if sample_weight is None else np.asarray(sample_weight, dtype=float)

    def fun(theta):
        f, g = loss_grad(theta, Xs, y, l2, sw)
        if not np.isfinite(f) or not np.all(np.isfinite(g)):
            raise NumericalError("non-finite logistic loss during training")
        return f, g

    theta0 = np.zeros(Xs.shape[1] + 1)
    if solver == "lbfgs":
        res = minimize(fun, theta0, jac=True, method="L-BFGS-B",
                       options={"maxiter": max_iter, "gtol": tol, "ftol": 1e-16, "maxcor": 20})
        theta, n_iter = res.x, int(res.nit)
        grad = fun(theta)[1]
    elif solver == "gd":
        s = np.full(len(y), 1.0 / len(y)) if sw is None else sw / sw.sum()
        Xb = np.column_stack([np.ones(len(y)), Xs]) * np.sqrt(s)[:, None]
        lipschitz = 0.25 * np.linalg.norm(Xb, 2) ** 2 + l2
        theta, n_iter, grad = _gradient_descent(fun, theta0, lipschitz, tol, max_iter)
    else:
        raise ConfigError(f"unknown solver {solver!r}")
    gmax = float(np.max(np.abs(grad)))
    converged = gmax < tol * 10
    if not converged:
        log.warning("logistic regression stopped with gradient max-norm %.3g (tol %.g)", gmax, tol)
    return LogRegModel(mean, scale, theta[1:].copy(), float(theta[0]), float(l2), converged, n_iter, gmax)
