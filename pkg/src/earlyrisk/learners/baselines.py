"""0R (majority class) and 1R (prior-GPA linear SVM) baselines."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..domain import HIGH, LOW
from ..errors import DomainError


@dataclass(frozen=True)
class ZeroRule:
    label: int

    def predict(self, X=None, n=None):
        n = len(X) if n is None else n
        return np.full(n, self.label, dtype=np.int64)

    def predict_proba(self, X=None, n=None):
        """P(Low): 1 when the constant prediction is Low, else 0."""
        n = len(X) if n is None else n
        return np.full(n, 1.0 if self.label == LOW else 0.0)


def zero_rule(y_train) -> ZeroRule:
    """Majority training class; a tie predicts High."""
    y = np.asarray(y_train)
    n_high = int(np.sum(y == HIGH))
    n_low = int(np.sum(y == LOW))
    return ZeroRule(HIGH if n_high >= n_low else LOW)


@dataclass(frozen=True)
class OneRuleSvm:
    """Threshold on prior GPA: High iff ``w * gpa + b > 0``."""

    w: float
    b: float
    objective: float
    n_iter: int

    @property
    def threshold(self):
        return -self.b / self.w if self.w != 0 else np.nan

    def decision_function(self, gpa):
        return self.w * np.asarray(gpa, dtype=float) + self.b

    def predict(self, gpa):
        return np.where(self.decision_function(gpa) > 0, HIGH, LOW)

    def predict_proba(self, gpa):
        """P(Low) via a logistic squash of the signed margin."""
        return 0.5 * (1.0 - np.tanh(0.5 * self.decision_function(gpa)))


def hinge_objective(w, b, x, s, C=1.0):
    """``0.5 w^2 + C * sum(max(0, 1 - s (w x + b)))`` with ``s`` in {-1, +1}."""
    m = 1.0 - s * (w * x + b)
    return 0.5 * w * w + C * float(np.sum(np.maximum(m, 0.0)))


def hinge_subgradient(w, b, x, s, C=1.0):
    active = (1.0 - s * (w * x + b)) > 0
    gw = w - C * float(np.sum(s[active] * x[active]))
    gb = -C * float(np.sum(s[active]))
    return gw, gb


GPA_UNIT = 1e-3  # the solver works in thousandths of a grade point


def one_rule_svm_fit(prior_gpa, y, C=1.0, n_iter=5000, eta0=10.0) -> OneRuleSvm:
    """1-D soft-margin linear SVM on prior GPA by sub-gradient descent.

    GPA enters the objective in thousandths of a grade point, centred on the
    training mean. At that scale and C=1 the fit separates any training set
    whose prior GPAs are separable at the transcript's 0.01 resolution. The
    sub-gradient steps are preconditioned by the feature range and decay as
    ``eta0 / sqrt(k)``; the iterate with the lowest objective is kept. The
    returned ``w, b`` are in GPA units.
    """
    x = np.asarray(prior_gpa, dtype=float)
    y = np.asarray(y)
    if x.shape != y.shape or x.ndim != 1:
        raise DomainError("prior GPA and labels must be aligned vectors")
    if np.isnan(x).any():
        raise DomainError("prior GPA missing for some training rows")
    if np.unique(y).size < 2:
        raise DomainError("both classes must be present")
    s = np.where(y == HIGH, 1.0, -1.0)
    mu = float(x.mean())
    xs = (x - mu) / GPA_UNIT
    scale = max(float(np.abs(xs).max()), 1.0)
    xn = xs / scale
    u = b = 0.0  # u = w * scale
    best = (np.inf, 0.0, 0.0)
    for k in range(1, n_iter + 1):
        margin = 1.0 - s * (u * xn + b)
        active = margin > 0
        obj = 0.5 * (u / scale) ** 2 + C * float(margin[active].sum())
        if obj < best[0]:
            best = (obj, u, b)
        gu = u / scale ** 2 - C * float(np.sum(s[active] * xn[active]))
        gb = -C * float(np.sum(s[active]))
        eta = eta0 / np.sqrt(k)
        u -= eta * gu
        b -= eta * gb
    obj, u, b = best
    w = u / scale / GPA_UNIT
    return OneRuleSvm(float(w), float(b - w * mu), float(obj), n_iter)
