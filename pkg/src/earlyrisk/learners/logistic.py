"""L2-regularised logistic regression fitted by full-batch gradient descent.

The model scores the log-odds of the Low class, so positive weights push
towards Low (at risk) and ``lr_predict_proba`` returns P(Low).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import _kernels
from ..domain import HIGH, LOW
from ..errors import DomainError


@dataclass(frozen=True)
class LrConfig:
    lam: float = 1e-3
    tol: float = 1e-6
    max_iter: int = 5000
    step: float | None = None  # None: 1 / Lipschitz constant of the gradient

    def __post_init__(self):
        if self.lam < 0 or self.tol <= 0 or self.max_iter < 1:
            raise DomainError("invalid LR configuration")
        if self.step is not None and self.step <= 0:
            raise DomainError("step must be positive")


@dataclass(frozen=True)
class LogisticModel:
    weights: np.ndarray
    bias: float
    config: LrConfig
    n_iter: int = 0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or not np.all(np.isfinite(w)) or not np.isfinite(self.bias):
            raise DomainError("logistic model parameters must be a finite vector")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n_features(self):
        return self.weights.size


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=float)))


def lr_loss(w, b, X, t, lam):
    """Mean log-loss of targets ``t`` (1 = Low) plus ``lam/2 * ||w||^2``."""
    z = X @ w + b
    # log(1 + e^z) - t z, computed stably
    return float(np.mean(np.logaddexp(0.0, z) - t * z) + 0.5 * lam * (w @ w))


def lr_loss_grad(w, b, X, t, lam):
    r = sigmoid(X @ w + b) - t
    return X.T @ r / len(t) + lam * w, float(r.mean())


def _check_xy(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise DomainError(f"X {X.shape} and y {y.shape} are not aligned")
    if not np.all(np.isfinite(X)):
        raise DomainError("X contains non-finite values")
    return X, y


def lr_fit(X, y, config: LrConfig | None = None) -> LogisticModel:
    """Fit on a fully imputed, standardised matrix; ``y`` holds HIGH/LOW labels."""
    config = config or LrConfig()
    X, y = _check_xy(X, y)
    if not np.all(np.isin(y, (0, 1))):
        raise DomainError("labels must be binary")
    if np.unique(y).size < 2:
        raise DomainError("both classes must be present")
    t = (y == LOW).astype(float)
    n, d = X.shape
    step = config.step
    if step is None:
        xa = np.hstack([X, np.ones((n, 1))])
        lip = (np.linalg.norm(xa, 2) ** 2) / (4.0 * n) + config.lam
        step = 1.0 / lip
    w, b, it = _kernels.lr_gd(X, t, np.zeros(d), 0.0, config.lam, step, config.tol, config.max_iter)
    return LogisticModel(np.asarray(w), float(b), config, int(it))


def lr_decision_function(model: LogisticModel, X):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DomainError(f"expected {model.n_features} columns, got {X.shape}")
    return X @ model.weights + model.bias


def lr_predict_proba(model: LogisticModel, X):
    """P(Low) for every row of ``X``."""
    return sigmoid(lr_decision_function(model, X))


def lr_predict(model: LogisticModel, X, threshold=0.5):
    """Hard HIGH/LOW labels; Low when P(Low) > threshold."""
    return np.where(lr_predict_proba(model, X) > threshold, LOW, HIGH)
