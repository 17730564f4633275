"""Hard-parameter-sharing multi-task CNN: one convolutional trunk, two heads.

The primary head predicts current-term performance of the training cohort;
the secondary head predicts prior-term performance across cohorts. Both
heads hold a reference to the same trunk dict, so an update made through
either task moves the shared convolution.
"""
from __future__ import annotations

import copy
import logging
from dataclasses import dataclass, field

import numpy as np

from .._rng import substream
from ..errors import DomainError, LeakageError
from ..seal import CURRENT, PRIOR, Lineage, SealedLabels, TaggedLabels
from .cnn import (Adam, Cnn1dModel, CnnArch, LossHistory, TrainConfig, _check_finite, _validate_xy,
                  cross_entropy, forward, init_head, init_trunk, cnn_loss_and_grad)

log = logging.getLogger(__name__)

TASKS = ("primary", "secondary")


@dataclass
class MtlModel:
    arch: CnnArch
    trunk: dict
    heads: dict  # task -> head params
    loss_weights: tuple = (1.0, 1.0)
    lineage: Lineage = field(default_factory=Lineage)

    @classmethod
    def initialise(cls, arch: CnnArch, seed=0):
        rng = substream(seed, "init")
        trunk = init_trunk(arch, rng)
        return cls(arch, trunk, {t: init_head(arch, rng) for t in TASKS})

    def task_model(self, task="primary") -> Cnn1dModel:
        """A CNN view whose trunk is this model's trunk object (not a copy)."""
        return Cnn1dModel(self.arch, self.trunk, self.heads[task])

    def params(self) -> dict:
        out = {f"trunk.{k}": v for k, v in self.trunk.items()}
        for t, h in self.heads.items():
            out.update({f"{t}.{k}": v for k, v in h.items()})
        return out

    def copy(self) -> "MtlModel":
        return MtlModel(self.arch, copy.deepcopy(self.trunk), copy.deepcopy(self.heads),
                        self.loss_weights, self.lineage)

    def predict_proba(self, x, task="primary"):
        """P(Low) from one head, inference mode."""
        return forward(self.arch, self.trunk, self.heads[task], x)[:, 0]


def _task_grads(model: MtlModel, task, x, y, rng):
    loss, g = cnn_loss_and_grad(model.task_model(task), x, y, training=True, rng=rng)
    trunk_g = {f"trunk.{k}": g[k] for k in model.trunk}
    head_g = {f"{task}.{k}": g[k] for k in model.heads[task]}
    return loss, trunk_g, head_g


def mtl_step_grads(model: MtlModel, xp, yp, xs, ys, rng=None, training=True):
    """Summed weighted loss of one primary and one secondary batch and its gradient."""
    wp, ws = model.loss_weights
    if training:
        lp, tp, hp = _task_grads(model, "primary", xp, yp, rng)
        ls, ts, hs = _task_grads(model, "secondary", xs, ys, rng)
    else:
        lp, gp = cnn_loss_and_grad(model.task_model("primary"), xp, yp)
        ls, gs = cnn_loss_and_grad(model.task_model("secondary"), xs, ys)
        tp = {f"trunk.{k}": gp[k] for k in model.trunk}
        hp = {f"primary.{k}": gp[k] for k in model.heads["primary"]}
        ts = {f"trunk.{k}": gs[k] for k in model.trunk}
        hs = {f"secondary.{k}": gs[k] for k in model.heads["secondary"]}
    grads = {k: wp * tp[k] + ws * ts[k] for k in tp}
    grads.update({k: wp * v for k, v in hp.items()})
    grads.update({k: ws * v for k, v in hs.items()})
    return wp * lp + ws * ls, grads


def _labels(labels, kind, name, forbidden_current=()):
    if isinstance(labels, SealedLabels):
        raise LeakageError(f"sealed labels of cohort {labels.cohort!r} passed as {name} labels")
    if not isinstance(labels, TaggedLabels):
        raise LeakageError(f"{name} labels must be tagged with their cohort and term")
    if labels.kind != kind:
        raise LeakageError(f"{name} task accepts {kind} labels only, got {labels.kind} labels of {labels.cohort!r}")
    if labels.kind == CURRENT and labels.cohort in forbidden_current:
        raise LeakageError(f"current labels of evaluation cohort {labels.cohort!r} reached training")
    return labels.values


def mtl_fit(model: MtlModel, primary, secondary, config: TrainConfig, validation=None, eval_cohorts=()):
    """Joint training of the shared trunk and both heads.

    ``primary`` is ``(x, TaggedLabels(current))`` of the training cohort and
    ``secondary`` is ``(x, TaggedLabels(prior))`` or a list of such pairs
    (concatenated). ``validation`` is a primary-task ``(x, labels)`` pair
    used for early stopping. Current labels of any cohort in
    ``eval_cohorts`` are refused.

    Each epoch resamples the primary set with replacement to the size of the
    secondary set; every step draws one batch per task and descends the
    summed cross-entropy. Returns ``(best_model, history)``.
    """
    eval_cohorts = tuple(eval_cohorts)
    xp, lab_p = primary
    yp = _labels(lab_p, CURRENT, "primary", eval_cohorts)
    if not isinstance(secondary, list):
        secondary = [secondary]
    xs_parts, ys_parts = [], []
    lineage = model.lineage.add(lab_p)
    for xs_i, lab_s in secondary:
        ys_parts.append(_labels(lab_s, PRIOR, "secondary"))
        xs_parts.append(np.asarray(xs_i, dtype=float))
        lineage = lineage.add(lab_s)
    xs = np.concatenate(xs_parts)
    ys = np.concatenate(ys_parts)
    keep = ys >= 0  # unknown prior labels are skipped
    xs, ys = xs[keep], ys[keep]
    xp, yp = _validate_xy(model.arch, xp, yp)
    xs, ys = _validate_xy(model.arch, xs, ys)
    if len(ys) == 0:
        raise DomainError("secondary task has no labelled rows")
    has_val = validation is not None
    if has_val:
        xv, lab_v = validation
        yv = _labels(lab_v, CURRENT, "validation", eval_cohorts)
        xv, yv = _validate_xy(model.arch, xv, yv)

    model = model.copy()
    model.lineage = lineage
    params = model.params()
    opt = Adam(lr=config.learning_rate)
    rng_shuffle = substream(config.seed, "init", "shuffle")
    rng_resample = substream(config.seed, "duplicate", "mtl")
    rng_drop = substream(config.seed, "dropout")
    hist = LossHistory()
    best = (np.inf, None, 0)
    stale = 0
    n_s = len(ys)
    bs = config.batch_size
    for epoch in range(1, config.epochs + 1):
        order_s = rng_shuffle.permutation(n_s)
        order_p = rng_resample.integers(0, len(yp), size=n_s)
        total = 0.0
        for s in range(0, n_s, bs):
            ip = order_p[s:s + bs]
            is_ = order_s[s:s + bs]
            loss, grads = mtl_step_grads(model, xp[ip], yp[ip], xs[is_], ys[is_], rng_drop)
            _check_finite(loss, params, f"epoch {epoch}, step {s // bs}")
            opt.step(params, grads)
            total += loss * len(is_)
        train_loss = total / n_s
        if has_val:
            probs, cache = forward(model.arch, model.trunk, model.heads["primary"], xv, cache=True)
            val_loss = cross_entropy(cache["logits"], yv)
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
                    break
    if has_val and best[1] is not None:
        hist.best_epoch = best[2]
        return best[1], hist
    hist.best_epoch = len(hist)
    return model, hist
