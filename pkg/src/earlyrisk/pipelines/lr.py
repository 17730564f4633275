"""Weekly-aggregate logistic-regression pipeline with leave-one-subject-out CV.

Per fold: training-mean imputation -> standardisation -> SMOTE ->
collinearity pruning -> correlation-based feature selection -> LR.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from sklearn.neighbors import NearestNeighbors

from .. import _kernels
from .._rng import substream
from ..domain import HIGH, LOW, labels_from_gpa
from ..errors import DomainError
from ..learners.logistic import LrConfig, lr_fit, lr_predict_proba
from .data import CohortData, weekly_table

log = logging.getLogger(__name__)

MISSING_FILL = 999.0
CFS_LEAKAGE_NOTE = ("feature selection compares held-out accuracy across correlation cut-offs, "
                    "so the held-out fold influences which features are kept")


def _default_grid():
    return tuple(round(0.05 * i, 2) for i in range(1, 11))


@dataclass(frozen=True)
class LrPipelineConfig:
    cfs_grid: tuple = field(default_factory=_default_grid)
    alpha: float = 0.05
    collinearity_cutoff: float = 0.7
    smote_k: int = 5
    fallback_top: int = 10
    target: str = "gpa"  # "gpa" (continuous when available) or "label"
    lr: LrConfig = field(default_factory=LrConfig)
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self):
        if not self.cfs_grid:
            raise DomainError("CFS grid must not be empty")
        if any(not 0 < r < 1 for r in self.cfs_grid):
            raise DomainError("CFS cut-offs must lie in (0, 1)")
        if not 0 < self.alpha < 1 or not 0 < self.collinearity_cutoff < 1:
            raise DomainError("alpha and collinearity cut-off must lie in (0, 1)")
        if self.smote_k < 1 or self.target not in ("gpa", "label"):
            raise DomainError("invalid SMOTE k or CFS target")


@dataclass
class FoldResult:
    fold: int
    held_out: list
    prob_low: np.ndarray
    pred: np.ndarray
    selected: list  # feature names
    importance: np.ndarray  # |standardised coefficient| per selected feature
    coef: np.ndarray
    stats: dict  # preprocessing statistics fitted on the training rows
    cfs_r: float | None = None
    cfs_fallback: bool = False
    leakage: list = field(default_factory=list)
    model: object = None  # fitted LogisticModel

    def to_log(self) -> dict:
        return {
            "fold": self.fold,
            "held_out": list(self.held_out),
            "n_train": self.stats.get("n_train"),
            "n_selected": len(self.selected),
            "cfs_r": self.cfs_r,
            "cfs_fallback": self.cfs_fallback,
            "leakage": list(self.leakage),
        }


# ---------------------------------------------------------------------------
# preprocessing stages


def impute_train_mean(train, test):
    """Fill missing cells of both matrices with per-column training means.

    Columns with no observed training value are filled with 999. Returns
    ``(train_filled, test_filled, fill_vector)``.
    """
    train = np.asarray(train, dtype=float)
    test = np.asarray(test, dtype=float)
    obs = ~np.isnan(train)
    cnt = obs.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(obs, train, 0.0).sum(axis=0) / cnt
    fill = np.where(cnt > 0, mean, MISSING_FILL)
    return (np.where(np.isnan(train), fill, train), np.where(np.isnan(test), fill, test), fill)


def standardize(train, test):
    """Z-score both matrices with training mean and population SD (SD 0 -> 1)."""
    mu = train.mean(axis=0)
    sd = train.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    return (train - mu) / sd, (test - mu) / sd, mu, sd


def smote(X, y, k=5, seed=0, rng=None):
    """Oversample the minority class to exactly match the majority.

    Each synthetic row is ``x_i + u (x_nn - x_i)`` for a uniformly drawn
    minority row ``x_i``, one of its ``k`` nearest minority neighbours
    (Euclidean) and ``u ~ U(0, 1)``. Returns ``(X_bal, y_bal, info)`` where
    ``info`` records the base and neighbour index of every synthetic row;
    original rows come first, unchanged.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    classes, counts = np.unique(y, return_counts=True)
    if classes.size != 2:
        raise DomainError("SMOTE needs exactly two classes")
    if counts[0] == counts[1]:
        return X.copy(), y.copy(), {"base": np.zeros(0, int), "neighbor": np.zeros(0, int), "gap": np.zeros(0)}
    minority = classes[np.argmin(counts)]
    idx = np.flatnonzero(y == minority)
    if idx.size < 2:
        raise DomainError("SMOTE needs at least two minority samples")
    need = int(counts.max() - counts.min())
    kk = min(k, idx.size - 1)
    nn = NearestNeighbors(n_neighbors=kk + 1).fit(X[idx])
    _, nbr = nn.kneighbors(X[idx])
    nbr = nbr[:, 1:]  # drop self
    rng = rng if rng is not None else substream(seed, "smote")
    base = rng.integers(0, idx.size, size=need)
    pick = rng.integers(0, kk, size=need)
    gap = rng.random(need)
    b = idx[base]
    nb = idx[nbr[base, pick]]
    synth = X[b] + gap[:, None] * (X[nb] - X[b])
    return (np.vstack([X, synth]), np.concatenate([y, np.full(need, minority, dtype=y.dtype)]),
            {"base": b, "neighbor": nb, "gap": gap})


def _normalised_columns(X):
    xc = X - X.mean(axis=0)
    norm = np.sqrt((xc * xc).sum(axis=0))
    ok = norm > 1e-12 * np.maximum(1.0, np.abs(X).max(axis=0))
    return np.where(ok, xc / np.where(ok, norm, 1.0), 0.0)


def prune_collinear(X, names, cutoff=0.7, block=512):
    """Names kept by a greedy pass in sorted-name order.

    A feature is dropped when ``|r| > cutoff`` against any feature already
    kept. Constant columns correlate with nothing and are kept. ``|r|`` is
    rounded to 12 decimals so a correlation of exactly the cut-off survives
    floating-point noise.
    """
    X = np.asarray(X, dtype=float)
    order = sorted(range(len(names)), key=lambda i: names[i])
    Z = _normalised_columns(X[:, order])
    kept = []  # positions in ``order``
    for s in range(0, Z.shape[1], block):
        cand = np.arange(s, min(s + block, Z.shape[1]))
        if kept:
            c = np.round(np.abs(Z[:, kept].T @ Z[:, cand]), 12)
            cand = cand[~(c > cutoff).any(axis=0)]
        if cand.size == 0:
            continue
        inner = np.round(np.abs(Z[:, cand].T @ Z[:, cand]), 12)
        keep = _kernels.greedy_prune(inner, cutoff)
        kept.extend(cand[keep].tolist())
    return [names[order[j]] for j in kept]


def correlation_with_target(X, t):
    """Pearson r of every column with ``t`` and its two-sided p-value."""
    Z = _normalised_columns(X)
    tc = t - t.mean()
    tn = np.sqrt(tc @ tc)
    if tn == 0:
        return np.zeros(X.shape[1]), np.ones(X.shape[1])
    r = np.clip(Z.T @ (tc / tn), -1.0, 1.0)
    n = len(t)
    with np.errstate(divide="ignore", invalid="ignore"):
        tstat = r * np.sqrt((n - 2) / np.maximum(1.0 - r * r, 1e-300))
    p = 2.0 * stats.t.sf(np.abs(tstat), n - 2)
    p = np.where(np.all(Z == 0, axis=0), 1.0, p)
    return r, p


@dataclass
class CfsResult:
    selected: list  # column indices
    r: float | None
    fallback: bool
    a_diff: float | None
    corr: np.ndarray


def cfs_select(X_fit, y_fit, X_corr, t_corr, X_test, y_test, grid, alpha=0.05, fallback_top=10,
               lr_config: LrConfig | None = None):
    """Correlation-based selection tuned on the held-out accuracy gap.

    Candidates are columns whose correlation with ``t_corr`` (computed on
    ``X_corr``) has p < ``alpha``. For each cut-off ``r`` the candidates with
    ``|corr| >= r`` are fitted on ``(X_fit, y_fit)`` and scored by
    ``a_diff = acc(test) - acc(train)``; the largest gap wins, ties to the
    smaller ``r``. With no candidate the ``fallback_top`` columns of largest
    ``|corr|`` are returned.
    """
    r_col, p_col = correlation_with_target(X_corr, t_corr)
    absr = np.abs(r_col)
    cand = np.flatnonzero(p_col < alpha)
    if cand.size == 0:
        top = np.argsort(-absr, kind="stable")[:fallback_top]
        log.info("CFS: no significant feature, falling back to top %d", top.size)
        return CfsResult(sorted(top.tolist()), None, True, None, r_col)
    best = None
    for r in sorted(grid):
        sel = cand[absr[cand] >= r]
        if sel.size == 0:
            continue
        m = lr_fit(X_fit[:, sel], y_fit, lr_config)
        a_train = np.mean(np.where(lr_predict_proba(m, X_fit[:, sel]) > 0.5, LOW, HIGH) == y_fit)
        a_test = np.mean(np.where(lr_predict_proba(m, X_test[:, sel]) > 0.5, LOW, HIGH) == y_test)
        diff = float(a_test - a_train)
        if best is None or diff > best[0]:
            best = (diff, r, sel)
    if best is None:  # every cut-off above the strongest candidate
        top = cand[np.argsort(-absr[cand], kind="stable")[:fallback_top]]
        return CfsResult(sorted(top.tolist()), None, True, None, r_col)
    return CfsResult(sorted(best[2].tolist()), best[1], False, best[0], r_col)


# ---------------------------------------------------------------------------
# LOSO driver


@dataclass
class LrRun:
    participants: list
    feature_names: list
    folds: list  # FoldResult
    config: LrPipelineConfig
    leakage: list

    def predictions(self):
        """``(participant_ids, prob_low, pred, fold)`` in participant order."""
        rows = {}
        for f in self.folds:
            for i, p in enumerate(f.held_out):
                rows[p] = (float(f.prob_low[i]), int(f.pred[i]), f.fold)
        pids = list(self.participants)
        return (pids, np.array([rows[p][0] for p in pids]), np.array([rows[p][1] for p in pids]),
                np.array([rows[p][2] for p in pids]))


def run_fold(fold, X, y, t, names, train_idx, test_idx, config: LrPipelineConfig, participants):
    """One LOSO fold; ``t`` is the CFS correlation target for every row."""
    xtr, xte, fill = impute_train_mean(X[train_idx], X[test_idx])
    xtr, xte, mu, sd = standardize(xtr, xte)
    ytr = y[train_idx]
    rng = substream(config.seed, "smote", fold)
    xb, yb, _ = smote(xtr, ytr, k=config.smote_k, rng=rng)
    kept = prune_collinear(xb, names, config.collinearity_cutoff)
    pos = {n: i for i, n in enumerate(names)}
    kidx = np.array([pos[n] for n in kept], dtype=int)
    cfs = cfs_select(xb[:, kidx], yb, xtr[:, kidx], t[train_idx], xte[:, kidx], y[test_idx],
                     config.cfs_grid, config.alpha, config.fallback_top, config.lr)
    sel = kidx[cfs.selected]
    model = lr_fit(xb[:, sel], yb, config.lr)
    prob = lr_predict_proba(model, xte[:, sel])
    stats_ = {"impute": fill, "mean": mu, "sd": sd, "kept": kept, "n_train": int(len(train_idx))}
    return FoldResult(
        fold=fold,
        held_out=[participants[i] for i in test_idx],
        prob_low=prob,
        pred=np.where(prob > 0.5, LOW, HIGH),
        selected=[names[i] for i in sel],
        importance=np.abs(model.weights),
        coef=model.weights.copy(),
        stats=stats_,
        cfs_r=cfs.r,
        cfs_fallback=cfs.fallback,
        leakage=["cfs_test_accuracy"],
        model=model,
    )


def lr_inputs(data: CohortData, config: LrPipelineConfig):
    """Weekly design matrix, labels and CFS target of a labelled cohort."""
    names, X = weekly_table(data)
    tagged = data.current_labels()
    y = np.asarray(tagged.values)
    if config.target == "gpa" and data.gpa_current is not None:
        t = np.asarray(data.gpa_current, dtype=float)
    else:
        t = (y == HIGH).astype(float)
    return names, X, y, t


def run_lr_pipeline(data: CohortData, config: LrPipelineConfig | None = None, folds=None) -> LrRun:
    """Leave-one-subject-out run over every participant of ``data``.

    Fold ids are positions in the sorted participant list, so results do not
    depend on the input order.
    """
    config = config or LrPipelineConfig()
    names, X, y, t = lr_inputs(data, config)
    pids = list(data.participants)
    order = sorted(range(len(pids)), key=lambda i: pids[i])
    todo = range(len(pids)) if folds is None else folds

    def job(fold):
        test = np.array([order[fold]])
        train = np.array([order[j] for j in range(len(pids)) if j != fold])
        return run_fold(fold, X, y, t, names, train, test, config, pids)

    if config.n_jobs != 1:
        from joblib import Parallel, delayed
        results = Parallel(n_jobs=config.n_jobs)(delayed(job)(f) for f in todo)
    else:
        results = [job(f) for f in todo]
    return LrRun(pids, names, list(results), config, ["cfs_test_accuracy: " + CFS_LEAKAGE_NOTE])
