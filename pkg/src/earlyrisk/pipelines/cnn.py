"""Daily-tensor 1-D CNN pipeline: 80/20 split, grouped CV model selection, repeats."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .._rng import derive_seed, substream
from ..domain import HIGH, LOW
from ..errors import DomainError
from ..eval.metrics import classification_metrics
from ..learners.cnn import Cnn1dModel, CnnArch, TrainConfig, cnn_fit, cnn_predict_proba
from .data import CohortData, daily_tensor

log = logging.getLogger(__name__)


def ffill_bfill(x):
    """Forward- then backward-fill NaN along the day axis of ``[P, D, F]`` (or ``[D, F]``).

    Series with no observation stay NaN; :func:`standardize_tensor` maps
    them to 0.
    """
    x = np.array(x, dtype=float)
    squeeze = x.ndim == 2
    if squeeze:
        x = x[None]
    p, d, f = x.shape
    obs = ~np.isnan(x)
    idx = np.where(obs, np.arange(d)[None, :, None], 0)
    np.maximum.accumulate(idx, axis=1, out=idx)
    seen = np.maximum.accumulate(obs, axis=1)
    ff = np.take_along_axis(x, idx, axis=1)
    ff[~seen] = np.nan
    # backward fill whatever is still missing (leading gaps)
    obs2 = ~np.isnan(ff)
    idx2 = np.where(obs2, np.arange(d)[None, :, None], d - 1)
    idx2 = np.minimum.accumulate(idx2[:, ::-1, :], axis=1)[:, ::-1, :]
    out = np.where(obs2, ff, np.take_along_axis(ff, idx2, axis=1))
    return out[0] if squeeze else out


def tensor_scaler(x_train):
    """Per-feature mean and SD over every (participant, day) training cell."""
    flat = x_train.reshape(-1, x_train.shape[-1])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)  # all-NaN columns
        mu = np.nanmean(flat, axis=0)
        sd = np.nanstd(flat, axis=0)
    mu = np.where(np.isnan(mu), 0.0, mu)
    sd = np.where(np.isnan(sd) | (sd <= 0), 1.0, sd)
    return mu, sd


def standardize_tensor(x, mu, sd):
    """Z-score with the given statistics; cells still missing become 0."""
    z = (x - mu) / sd
    return np.where(np.isnan(z), 0.0, z)


def duplicate_balance(x, y, seed=0, rng=None):
    """Duplicate random minority rows (with replacement) until classes are 1:1.

    Returns ``(x_bal, y_bal, duplicated_indices)``; originals come first.
    """
    y = np.asarray(y)
    classes, counts = np.unique(y, return_counts=True)
    if classes.size != 2:
        raise DomainError("duplicate balancing needs both classes")
    if counts[0] == counts[1]:
        return np.array(x, copy=True), y.copy(), np.zeros(0, dtype=int)
    minority = classes[np.argmin(counts)]
    idx = np.flatnonzero(y == minority)
    rng = rng if rng is not None else substream(seed, "duplicate")
    dup = idx[rng.integers(0, idx.size, size=int(counts.max() - counts.min()))]
    return np.concatenate([x, x[dup]]), np.concatenate([y, y[dup]]), dup


def stratified_split(pids, y, test_fraction, rng):
    """Participant split keeping each class's share; returns (train, test) id lists."""
    pids = np.asarray(pids, dtype=object)
    test = []
    for c in (LOW, HIGH):
        members = np.sort(pids[np.asarray(y) == c])
        k = int(round(test_fraction * members.size))
        test.extend(rng.choice(members, size=k, replace=False).tolist())
    test = set(test)
    return sorted(p for p in pids if p not in test), sorted(test)


def stratified_folds(pids, y, n_folds, rng):
    """Disjoint participant folds with classes dealt round-robin after shuffling."""
    pids = np.asarray(pids, dtype=object)
    folds = [[] for _ in range(n_folds)]
    k = 0
    for c in (LOW, HIGH):
        members = rng.permutation(np.sort(pids[np.asarray(y) == c]))
        for p in members:
            folds[k % n_folds].append(p)
            k += 1
    return [sorted(f) for f in folds]


@dataclass(frozen=True)
class CnnPipelineConfig:
    train: TrainConfig = field(default_factory=TrainConfig)
    arch: dict = field(default_factory=dict)  # CnnArch overrides (kernel, channels, ...)
    lr_grid: tuple = (1e-4, 1e-3)
    n_repeats: int = 5
    n_folds: int = 5
    test_fraction: float = 0.2
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self):
        if self.n_repeats < 1 or self.n_folds < 2 or not 0 < self.test_fraction < 1 or not self.lr_grid:
            raise DomainError("invalid CNN pipeline configuration")


def prepare(x_raw_fit, *others):
    """Impute by ffill/bfill, standardise on the first array's cells."""
    fit = ffill_bfill(x_raw_fit)
    mu, sd = tensor_scaler(fit)
    outs = [standardize_tensor(fit, mu, sd)] + [standardize_tensor(ffill_bfill(o), mu, sd) for o in others]
    return outs, mu, sd


def fit_cnn(x_train, y_train, x_val, y_val, train_cfg: TrainConfig, arch_kw, seed):
    """Balance, initialise and fit one CNN; ``seed`` drives init, dropout and order."""
    xb, yb, _ = duplicate_balance(x_train, y_train, rng=substream(seed, "duplicate"))
    arch = CnnArch(n_days=x_train.shape[1], n_features=x_train.shape[2], **arch_kw)
    model = Cnn1dModel.initialise(arch, seed)
    return cnn_fit(model, xb, yb, replace(train_cfg, seed=seed), x_val, y_val)


@dataclass
class CnnRepeat:
    repeat: int
    train_ids: list
    test_ids: list
    cv_folds: list  # list of validation-id lists
    cv_scores: dict  # lr -> mean validation AUC
    chosen_lr: float
    refit_epochs: int
    prob_low: np.ndarray  # on test_ids
    pred: np.ndarray
    metrics: dict
    model: object = None  # refitted Cnn1dModel
    history: object = None

    def to_log(self) -> dict:
        return {"repeat": self.repeat, "n_train": len(self.train_ids), "test_ids": list(self.test_ids),
                "cv_folds": [list(f) for f in self.cv_folds],
                "cv_auc": {str(k): v for k, v in self.cv_scores.items()},
                "chosen_learning_rate": self.chosen_lr, "refit_epochs": self.refit_epochs,
                "metrics": self.metrics}


@dataclass
class CnnRun:
    repeats: list
    config: CnnPipelineConfig

    def mean_metrics(self):
        keys = self.repeats[0].metrics.keys()
        return {k: float(np.nanmean([r.metrics[k] for r in self.repeats])) for k in keys}


def _val_auc(model, x, y):
    from ..eval.metrics import auc_score
    return auc_score(np.asarray(y) == LOW, cnn_predict_proba(model, x))


def run_cnn_repeat(data: CohortData, config: CnnPipelineConfig, repeat: int, tensor=None) -> CnnRepeat:
    names, x_all = tensor if tensor is not None else daily_tensor(data)
    pids = list(data.participants)
    y_all = np.asarray(data.current_labels().values)
    pos = {p: i for i, p in enumerate(pids)}
    rng = substream(config.seed, "split", repeat)
    train_ids, test_ids = stratified_split(pids, y_all, config.test_fraction, rng)
    tr = np.array([pos[p] for p in train_ids])
    te = np.array([pos[p] for p in test_ids])
    folds = stratified_folds(train_ids, y_all[tr], config.n_folds, rng)
    if set().union(*map(set, folds)) & set(test_ids):
        raise DomainError("test participants leaked into model-selection folds")

    scores, best_epochs = {}, {}
    for lr in config.lr_grid:
        aucs, epochs = [], []
        for k, val_ids in enumerate(folds):
            vset = set(val_ids)
            fit_ids = [p for p in train_ids if p not in vset]
            fi = np.array([pos[p] for p in fit_ids])
            vi = np.array([pos[p] for p in val_ids])
            (xf, xv), _, _ = prepare(x_all[fi], x_all[vi])
            seed = derive_seed(config.seed, "init", repeat, k, str(lr))
            model, hist = fit_cnn(xf, y_all[fi], xv, y_all[vi], replace(config.train, learning_rate=lr),
                                  config.arch, seed)
            aucs.append(_val_auc(model, xv, y_all[vi]))
            epochs.append(hist.best_epoch)
        scores[lr] = float(np.nanmean(aucs))
        best_epochs[lr] = int(round(float(np.median(epochs))))
    chosen = max(sorted(config.lr_grid), key=lambda lr: scores[lr])  # ties -> smaller rate
    refit_epochs = max(1, best_epochs[chosen])
    (xtr, xte), _, _ = prepare(x_all[tr], x_all[te])
    seed = derive_seed(config.seed, "init", repeat, "refit")
    cfg = replace(config.train, learning_rate=chosen, epochs=refit_epochs)
    model, hist = fit_cnn(xtr, y_all[tr], None, None, cfg, config.arch, seed)
    prob = cnn_predict_proba(model, xte)
    pred = np.where(prob > 0.5, LOW, HIGH)
    return CnnRepeat(repeat, train_ids, test_ids, folds, scores, chosen, refit_epochs, prob, pred,
                     classification_metrics(y_all[te], pred, prob), model, hist)


def run_cnn_pipeline(data: CohortData, config: CnnPipelineConfig | None = None) -> CnnRun:
    """Repeated 80/20 evaluation with 5-fold grouped CV for the learning rate.

    Each repeat refits the chosen configuration on the whole training split
    for the median early-stopping epoch seen in CV and scores the test split
    once.
    """
    config = config or CnnPipelineConfig()
    tensor = daily_tensor(data)
    if config.n_jobs != 1:
        from joblib import Parallel, delayed
        reps = Parallel(n_jobs=config.n_jobs)(
            delayed(run_cnn_repeat)(data, config, r, tensor) for r in range(config.n_repeats))
    else:
        reps = [run_cnn_repeat(data, config, r, tensor) for r in range(config.n_repeats)]
    return CnnRun(list(reps), config)
