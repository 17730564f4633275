"""Small 1-D CNN over the day axis, written out by hand.

conv (valid) -> ReLU -> inverted dropout -> max-pool -> flatten ->
dense + ReLU -> dense + softmax over (Low, High).

Parameters live in two dicts, ``trunk`` (the convolution) and ``head``
(the dense stack), so a multi-task model can share one trunk between heads.
Output column ``k`` is the probability of label ``k`` (LOW = 0, HIGH = 1).
"""
from __future__ import annotations

import copy
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .. import _kernels
from .._rng import substream
from ..errors import DomainError, TrainingError

log = logging.getLogger(__name__)

TRUNK_KEYS = ("conv_w", "conv_b")
HEAD_KEYS = ("d1_w", "d1_b", "out_w", "out_b")


@dataclass(frozen=True)
class CnnArch:
    n_days: int
    n_features: int
    kernel: int = 3
    channels: int = 8
    pool: int = 2
    hidden: int = 32
    dropout: float = 0.85
    n_classes: int = 2

    def __post_init__(self):
        if min(self.n_days, self.n_features, self.kernel, self.channels, self.pool, self.hidden) < 1:
            raise DomainError("architecture sizes must be positive")
        if self.n_days < self.kernel:
            raise DomainError(f"{self.n_days} days is shorter than kernel width {self.kernel}")
        if self.pooled_length < 1:
            raise DomainError("pooling leaves no positions")
        if not 0.0 <= self.dropout < 1.0:
            raise DomainError("dropout rate must be in [0, 1)")

    @property
    def conv_length(self):
        return self.n_days - self.kernel + 1

    @property
    def pooled_length(self):
        return self.conv_length // self.pool

    @property
    def flat_size(self):
        return self.pooled_length * self.channels

    def trunk_shapes(self):
        return {"conv_w": (self.channels, self.n_features, self.kernel), "conv_b": (self.channels,)}

    def head_shapes(self):
        return {"d1_w": (self.flat_size, self.hidden), "d1_b": (self.hidden,),
                "out_w": (self.hidden, self.n_classes), "out_b": (self.n_classes,)}


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 150
    batch_size: int = 6
    learning_rate: float = 1e-4
    patience: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.patience < 1 or not self.learning_rate > 0:
            raise DomainError("training configuration values must be positive")


def _glorot(rng, shape, fan_in, fan_out):
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def init_trunk(arch: CnnArch, rng) -> dict:
    c, f, k = arch.trunk_shapes()["conv_w"]
    return {"conv_w": _glorot(rng, (c, f, k), f * k, c * k), "conv_b": np.zeros(c)}


def init_head(arch: CnnArch, rng) -> dict:
    return {
        "d1_w": _glorot(rng, (arch.flat_size, arch.hidden), arch.flat_size, arch.hidden),
        "d1_b": np.zeros(arch.hidden),
        "out_w": _glorot(rng, (arch.hidden, arch.n_classes), arch.hidden, arch.n_classes),
        "out_b": np.zeros(arch.n_classes),
    }


@dataclass
class Cnn1dModel:
    arch: CnnArch
    trunk: dict
    head: dict

    @classmethod
    def initialise(cls, arch: CnnArch, seed=0):
        rng = substream(seed, "init")
        return cls(arch, init_trunk(arch, rng), init_head(arch, rng))

    @property
    def params(self) -> dict:
        return {**self.trunk, **self.head}

    @property
    def n_params(self):
        return sum(v.size for v in self.params.values())

    def copy(self) -> "Cnn1dModel":
        return Cnn1dModel(self.arch, copy.deepcopy(self.trunk), copy.deepcopy(self.head))

    def check(self):
        for name, shape in {**self.arch.trunk_shapes(), **self.arch.head_shapes()}.items():
            if self.params[name].shape != shape:
                raise DomainError(f"{name} has shape {self.params[name].shape}, expected {shape}")
            if not np.all(np.isfinite(self.params[name])):
                raise TrainingError(f"{name} has non-finite entries")


# ---------------------------------------------------------------------------
# forward / backward


def _softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def forward(arch: CnnArch, trunk, head, x, training=False, rng=None, cache=False):
    x = np.asarray(x, dtype=float)
    if x.ndim != 3 or x.shape[1:] != (arch.n_days, arch.n_features):
        raise DomainError(f"expected [B, {arch.n_days}, {arch.n_features}] input, got {x.shape}")
    bsz = x.shape[0]
    z1 = _kernels.conv1d_forward(x, trunk["conv_w"], trunk["conv_b"])  # [B, L, C]
    a1 = np.maximum(z1, 0.0)
    if training and arch.dropout > 0:
        if rng is None:
            raise DomainError("training-mode forward needs a random generator for dropout")
        keep = 1.0 - arch.dropout
        mask = (rng.random(a1.shape) < keep) / keep
        a1 = a1 * mask
    else:
        mask = None
    lp, pw, ch = arch.pooled_length, arch.pool, arch.channels
    win = a1[:, :lp * pw, :].reshape(bsz, lp, pw, ch)
    arg = win.argmax(axis=2)  # [B, Lp, C]
    pooled = np.take_along_axis(win, arg[:, :, None, :], axis=2)[:, :, 0, :]
    flat = pooled.reshape(bsz, lp * ch)
    h = np.maximum(flat @ head["d1_w"] + head["d1_b"], 0.0)
    logits = h @ head["out_w"] + head["out_b"]
    probs = _softmax(logits)
    if not cache:
        return probs
    return probs, {"x": x, "z1": z1, "mask": mask, "arg": arg, "flat": flat, "h": h, "logits": logits}


def cross_entropy(logits, y):
    """Mean categorical cross-entropy of integer labels from logits."""
    z = logits - logits.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    return float(-np.mean(logp[np.arange(len(y)), y]))


def backward(arch: CnnArch, trunk, head, cache, y):
    """Gradients of the mean cross-entropy w.r.t. trunk and head parameters."""
    y = np.asarray(y, dtype=np.int64)
    bsz = len(y)
    g = _softmax(cache["logits"])
    g[np.arange(bsz), y] -= 1.0
    g /= bsz
    h = cache["h"]
    gh = {"out_w": h.T @ g, "out_b": g.sum(0)}
    dh = (g @ head["out_w"].T) * (h > 0)
    gh["d1_w"] = cache["flat"].T @ dh
    gh["d1_b"] = dh.sum(0)
    dflat = dh @ head["d1_w"].T
    lp, pw, ch = arch.pooled_length, arch.pool, arch.channels
    dpool = dflat.reshape(bsz, lp, ch)
    dwin = np.zeros((bsz, lp, pw, ch))
    np.put_along_axis(dwin, cache["arg"][:, :, None, :], dpool[:, :, None, :], axis=2)
    da1 = np.zeros_like(cache["z1"])
    da1[:, :lp * pw, :] = dwin.reshape(bsz, lp * pw, ch)
    if cache["mask"] is not None:
        da1 *= cache["mask"]
    dz1 = da1 * (cache["z1"] > 0)
    dw, db = _kernels.conv1d_backward(cache["x"], dz1, arch.kernel)
    return {"conv_w": dw, "conv_b": db}, gh


def cnn_forward(model: Cnn1dModel, batch, training=False, rng=None):
    """Class probabilities [B, 2]; dropout is active only when ``training``."""
    return forward(model.arch, model.trunk, model.head, batch, training, rng)


def cnn_predict_proba(model: Cnn1dModel, x):
    """P(Low) per row, inference mode."""
    return cnn_forward(model, x)[:, 0]


def cnn_loss_and_grad(model: Cnn1dModel, x, y, training=False, rng=None):
    probs, cache = forward(model.arch, model.trunk, model.head, x, training, rng, cache=True)
    loss = cross_entropy(cache["logits"], np.asarray(y, dtype=np.int64))
    gt, gh = backward(model.arch, model.trunk, model.head, cache, y)
    return loss, {**gt, **gh}


# ---------------------------------------------------------------------------
# optimiser


@dataclass
class Adam:
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def step(self, params: dict, grads: dict):
        """In-place update of ``params`` (name -> array) from ``grads``."""
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for k, g in grads.items():
            p = params[k]
            if k not in self.m:
                self.m[k] = np.zeros_like(p)
                self.v[k] = np.zeros_like(p)
            m, v = self.m[k], self.v[k]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


# ---------------------------------------------------------------------------
# training


@dataclass
class LossHistory:
    epoch: list = field(default_factory=list)
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    best_epoch: int = 0
    stopped_early: bool = False

    def append(self, epoch, train_loss, val_loss):
        self.epoch.append(epoch)
        self.train_loss.append(train_loss)
        self.val_loss.append(val_loss)

    def to_csv(self, path):
        import pandas as pd
        pd.DataFrame({"epoch": self.epoch, "train_loss": self.train_loss, "val_loss": self.val_loss}).to_csv(
            path, index=False, float_format="%.10g")

    def __len__(self):
        return len(self.epoch)


def _check_finite(loss, params, where):
    if not np.isfinite(loss):
        norms = {k: float(np.linalg.norm(v)) for k, v in params.items()}
        raise TrainingError(f"non-finite loss {loss} at {where}; parameter norms {norms}")


def _validate_xy(arch, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if x.ndim != 3 or x.shape[0] != len(y):
        raise DomainError("inputs and labels are not aligned")
    if not np.all(np.isfinite(x)):
        raise DomainError("inputs must be imputed (finite)")
    if not np.all((y >= 0) & (y < arch.n_classes)):
        raise DomainError("labels outside the class range")
    return x, y


def cnn_fit(model: Cnn1dModel, x, y, config: TrainConfig, x_val=None, y_val=None):
    """Mini-batch Adam on cross-entropy with early stopping on validation loss.

    Returns ``(best_model, history)``; the input model is not modified. Without
    a validation set every epoch runs and the final parameters are returned.
    """
    model = model.copy()
    model.check()
    x, y = _validate_xy(model.arch, x, y)
    has_val = x_val is not None
    if has_val:
        x_val, y_val = _validate_xy(model.arch, x_val, y_val)
    params = model.params  # views onto the model's own arrays
    opt = Adam(lr=config.learning_rate)
    rng_shuffle = substream(config.seed, "init", "shuffle")
    rng_drop = substream(config.seed, "dropout")
    hist = LossHistory()
    best = (np.inf, None, 0)
    stale = 0
    n = len(y)
    for epoch in range(1, config.epochs + 1):
        order = rng_shuffle.permutation(n)
        total = 0.0
        for s in range(0, n, config.batch_size):
            idx = order[s:s + config.batch_size]
            loss, grads = cnn_loss_and_grad(model, x[idx], y[idx], training=True, rng=rng_drop)
            _check_finite(loss, params, f"epoch {epoch}, batch {s // config.batch_size}")
            opt.step(params, grads)
            total += loss * len(idx)
        train_loss = total / n
        if has_val:
            probs, cache = forward(model.arch, model.trunk, model.head, x_val, cache=True)
            val_loss = cross_entropy(cache["logits"], y_val)
            _check_finite(val_loss, params, f"epoch {epoch} validation")
        else:
            val_loss = np.nan
        hist.append(epoch, train_loss, val_loss)
        if has_val:
            if val_loss < best[0]:
                best = (val_loss, model.copy(), epoch)
                stale = 0
            else:
                stale += 1
                if stale >= config.patience:
                    hist.stopped_early = True
                    log.debug("early stop at epoch %d (best %d)", epoch, best[2])
                    break
    if has_val and best[1] is not None:
        hist.best_epoch = best[2]
        return best[1], hist
    hist.best_epoch = len(hist)
    return model, hist


def with_seed(config: TrainConfig, seed) -> TrainConfig:
    return replace(config, seed=int(seed))
