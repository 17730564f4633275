"""Central finite-difference checks of hand-derived gradients."""
from __future__ import annotations

import numpy as np

FD_STEP = 1e-4
REL_FLOOR = 1e-6


def relative_error(a, n, floor=REL_FLOOR):
    a = np.asarray(a, dtype=float)
    n = np.asarray(n, dtype=float)
    return np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)


def numeric_gradient(loss_fn, params: dict, step=FD_STEP):
    """Central differences of ``loss_fn()`` w.r.t. every entry of ``params``.

    ``params`` values are perturbed in place and restored.
    """
    out = {}
    for k, p in params.items():
        g = np.zeros_like(p, dtype=float)
        flat = p.reshape(-1)
        gf = g.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + step
            fp = loss_fn()
            flat[i] = old - step
            fm = loss_fn()
            flat[i] = old
            gf[i] = (fp - fm) / (2.0 * step)
        out[k] = g
    return out


def gradient_check(loss_and_grad, params: dict, step=FD_STEP, max_params=500):
    """Max relative error between analytic and central-difference gradients.

    ``loss_and_grad()`` must read the arrays in ``params`` and return
    ``(loss, {name: grad})``.
    """
    n = sum(p.size for p in params.values())
    if n > max_params:
        raise ValueError(f"{n} parameters exceeds the check limit of {max_params}")
    _, analytic = loss_and_grad()
    analytic = {k: np.array(v, dtype=float) for k, v in analytic.items()}
    numeric = numeric_gradient(lambda: loss_and_grad()[0], params, step)
    return max(float(relative_error(analytic[k], numeric[k]).max()) for k in params)


def cnn_gradient_check(model, x, y, step=FD_STEP):
    """Gradient check of a CNN's cross-entropy with dropout disabled."""
    from .cnn import cnn_loss_and_grad
    params = model.params
    return gradient_check(lambda: cnn_loss_and_grad(model, x, y, training=False), params, step)


def lr_gradient_check(w, b, X, t, lam, step=FD_STEP):
    from .logistic import lr_loss, lr_loss_grad
    params = {"w": np.array(w, dtype=float), "b": np.array([b], dtype=float)}

    def f():
        gw, gb = lr_loss_grad(params["w"], params["b"][0], X, t, lam)
        return lr_loss(params["w"], params["b"][0], X, t, lam), {"w": gw, "b": np.array([gb])}

    return gradient_check(f, params, step)


def hinge_gradient_check(w, b, x, s, C=1.0, step=FD_STEP):
    """Hinge objective check; the caller keeps every margin off its kink."""
    from .baselines import hinge_objective, hinge_subgradient
    params = {"w": np.array([w], dtype=float), "b": np.array([b], dtype=float)}

    def f():
        gw, gb = hinge_subgradient(params["w"][0], params["b"][0], x, s, C)
        return hinge_objective(params["w"][0], params["b"][0], x, s, C), {"w": np.array([gw]), "b": np.array([gb])}

    return gradient_check(f, params, step)
