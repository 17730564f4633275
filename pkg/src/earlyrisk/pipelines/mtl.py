"""Cross-cohort training: multi-task CNN plus single-task baselines scored on a sealed cohort.

Cohort B's current-term labels arrive as :class:`SealedLabels`; nothing in
this module can read them. Scoring happens in
:func:`earlyrisk.eval.report.generalizability_report`.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .._rng import derive_seed, substream
from ..domain import HIGH, LOW
from ..errors import DomainError, LeakageError
from ..learners.baselines import one_rule_svm_fit, zero_rule
from ..learners.cnn import CnnArch, TrainConfig
from ..learners.logistic import lr_fit, lr_predict_proba
from ..learners.mtl import MtlModel, mtl_fit
from ..seal import CURRENT, Lineage, TaggedLabels
from .cnn import duplicate_balance, ffill_bfill, fit_cnn, standardize_tensor, stratified_split, tensor_scaler
from .data import CohortData, daily_tensor, weekly_table
from .lr import LrPipelineConfig, cfs_select, impute_train_mean, prune_collinear, smote, standardize

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TransferConfig:
    train: TrainConfig = field(default_factory=lambda: TrainConfig(learning_rate=1e-3))
    arch: dict = field(default_factory=dict)
    val_fraction: float = 0.2
    seed: int = 0
    scaling: str = "per_cohort"  # MTL only: "per_cohort" or "pooled"

    def __post_init__(self):
        if not 0 < self.val_fraction < 1:
            raise DomainError("validation fraction must lie in (0, 1)")
        if self.scaling not in ("per_cohort", "pooled"):
            raise DomainError(f"unknown scaling {self.scaling!r}")


@dataclass
class TransferResult:
    approach: str
    participants: list  # cohort B ids
    prob_low: np.ndarray
    pred: np.ndarray
    lineage: Lineage
    notes: list = field(default_factory=list)
    model: object = None
    history: object = None


def _check_target(data_b: CohortData):
    if data_b.gpa_current is not None:
        raise LeakageError(f"cohort {data_b.cohort_id!r} must be sealed before cross-cohort training")


def common_features(*datasets):
    feats = set(datasets[0].daily.features)
    for d in datasets[1:]:
        feats &= set(d.daily.features)
    return sorted(feats)


def _tensors(data_a, data_b):
    feats = common_features(data_a, data_b)
    _, xa = daily_tensor(data_a, features=feats)
    _, xb = daily_tensor(data_b, features=feats)
    return feats, ffill_bfill(xa), ffill_bfill(xb)


def _split_a(data_a, config):
    ya = np.asarray(data_a.current_labels().values)
    pids = list(data_a.participants)
    fit_ids, val_ids = stratified_split(pids, ya, config.val_fraction, substream(config.seed, "split", "val"))
    pos = {p: i for i, p in enumerate(pids)}
    return ya, np.array([pos[p] for p in fit_ids]), np.array([pos[p] for p in val_ids])


def run_mtl_pipeline(data_a: CohortData, data_b: CohortData, config: TransferConfig | None = None) -> TransferResult:
    """Primary task: A's current labels; secondary task: prior labels of A and B.

    Both cohorts' inputs are training data here, so each is standardised on
    its own cells (``scaling="per_cohort"``, no labels involved) or on the
    pooled cells (``"pooled"``).
    A stratified slice of A is held out for early stopping on the primary
    loss. When B has no prior labels the secondary task uses A alone.
    """
    config = config or TransferConfig()
    _check_target(data_b)
    notes = []
    feats, xa, xb = _tensors(data_a, data_b)
    if config.scaling == "pooled":
        mu, sd = tensor_scaler(np.concatenate([xa, xb]))
        xa, xb = standardize_tensor(xa, mu, sd), standardize_tensor(xb, mu, sd)
    else:
        xa = standardize_tensor(xa, *tensor_scaler(xa))
        xb = standardize_tensor(xb, *tensor_scaler(xb))
    ya, fit, val = _split_a(data_a, config)

    seed = derive_seed(config.seed, "init", "mtl")
    xp, yp, _ = duplicate_balance(xa[fit], ya[fit], rng=substream(seed, "duplicate", "primary"))
    primary = (xp, TaggedLabels(yp, CURRENT, data_a.cohort_id))
    validation = (xa[val], TaggedLabels(ya[val], CURRENT, data_a.cohort_id))

    sec_parts = [(xa, data_a.prior_labels())]
    if data_b.has_prior:
        sec_parts.append((xb, data_b.prior_labels()))
    else:
        notes.append(f"cohort {data_b.cohort_id} has no prior-term labels; secondary task uses "
                     f"{data_a.cohort_id} only")
        log.warning(notes[-1])
    xs = np.concatenate([x for x, _ in sec_parts])
    ys = np.concatenate([lab.values for _, lab in sec_parts])
    known = ys >= 0
    xs, ys = xs[known], ys[known]
    xs, ys, _ = duplicate_balance(xs, ys, rng=substream(seed, "duplicate", "secondary"))
    from ..seal import PRIOR
    secondary = (xs, TaggedLabels(ys, PRIOR, "+".join(sorted({lab.cohort for _, lab in sec_parts}))))

    arch = CnnArch(n_days=xa.shape[1], n_features=xa.shape[2], **config.arch)
    model = MtlModel.initialise(arch, seed)
    model, hist = mtl_fit(model, primary, secondary, replace(config.train, seed=seed), validation,
                          eval_cohorts=(data_b.cohort_id,))
    model.lineage = Lineage(model.lineage.current,
                            frozenset(lab.cohort for _, lab in sec_parts))
    prob = model.predict_proba(xb, "primary")
    return TransferResult("mtl", list(data_b.participants), prob, np.where(prob > 0.5, LOW, HIGH),
                          model.lineage, notes, model, hist)


def run_cnn_transfer(data_a: CohortData, data_b: CohortData, config: TransferConfig | None = None) -> TransferResult:
    """Single-task CNN fitted on A (standardised on A only) and applied to B."""
    config = config or TransferConfig()
    _check_target(data_b)
    feats, xa, xb = _tensors(data_a, data_b)
    ya, fit, val = _split_a(data_a, config)
    mu, sd = tensor_scaler(xa[fit])
    xa = standardize_tensor(xa, mu, sd)
    xb = standardize_tensor(xb, mu, sd)
    seed = derive_seed(config.seed, "init", "cnn")
    model, hist = fit_cnn(xa[fit], ya[fit], xa[val], ya[val], config.train, config.arch, seed)
    from ..learners.cnn import cnn_predict_proba
    prob = cnn_predict_proba(model, xb)
    lineage = Lineage(frozenset({data_a.cohort_id}))
    return TransferResult("cnn", list(data_b.participants), prob, np.where(prob > 0.5, LOW, HIGH),
                          lineage, [], model, hist)


def run_lr_transfer(data_a: CohortData, data_b: CohortData, config: LrPipelineConfig | None = None,
                    val_fraction=0.2) -> TransferResult:
    """LR pipeline fitted on A and applied to B.

    The CFS cut-off is tuned on a stratified validation slice of A instead
    of the (sealed) evaluation cohort.
    """
    config = config or LrPipelineConfig()
    _check_target(data_b)
    na, xa_raw = weekly_table(data_a)
    nb, xb_raw = weekly_table(data_b)
    names = sorted(set(na) & set(nb))
    ia = {n: i for i, n in enumerate(na)}
    ib = {n: i for i, n in enumerate(nb)}
    xa_raw = xa_raw[:, [ia[n] for n in names]]
    xb_raw = xb_raw[:, [ib[n] for n in names]]
    ya = np.asarray(data_a.current_labels().values)
    t = np.asarray(data_a.gpa_current, dtype=float) if config.target == "gpa" else (ya == HIGH).astype(float)
    pids = list(data_a.participants)
    fit_ids, val_ids = stratified_split(pids, ya, val_fraction, substream(config.seed, "split", "lr"))
    pos = {p: i for i, p in enumerate(pids)}
    fi = np.array([pos[p] for p in fit_ids])
    vi = np.array([pos[p] for p in val_ids])

    def stage(train_idx, other):
        xtr, xo, _ = impute_train_mean(xa_raw[train_idx], other)
        xtr, xo, _, _ = standardize(xtr, xo)
        xb_, yb_, _ = smote(xtr, ya[train_idx], config.smote_k, rng=substream(config.seed, "smote", "transfer"))
        kept = prune_collinear(xb_, names, config.collinearity_cutoff)
        return xtr, xo, xb_, yb_, kept

    # tune the cut-off on A's validation slice
    xtr, xv, xbal, ybal, kept = stage(fi, xa_raw[vi])
    kidx = np.array([names.index(n) for n in kept])
    cfs = cfs_select(xbal[:, kidx], ybal, xtr[:, kidx], t[fi], xv[:, kidx], ya[vi], config.cfs_grid,
                     config.alpha, config.fallback_top, config.lr)
    # refit on all of A with the chosen cut-off
    all_a = np.arange(len(pids))
    xtr, xo, xbal, ybal, kept = stage(all_a, xb_raw)
    kidx = np.array([names.index(n) for n in kept])
    from .lr import correlation_with_target
    r, p = correlation_with_target(xtr[:, kidx], t)
    if cfs.fallback or cfs.r is None:
        sel = np.argsort(-np.abs(r), kind="stable")[:config.fallback_top]
    else:
        sel = np.flatnonzero((p < config.alpha) & (np.abs(r) >= cfs.r))
        if sel.size == 0:
            sel = np.argsort(-np.abs(r), kind="stable")[:config.fallback_top]
    cols = kidx[np.sort(sel)]
    model = lr_fit(xbal[:, cols], ybal, config.lr)
    prob = lr_predict_proba(model, xo[:, cols])
    return TransferResult("lr", list(data_b.participants), prob, np.where(prob > 0.5, LOW, HIGH),
                          Lineage(frozenset({data_a.cohort_id})), [f"cfs cut-off {cfs.r} tuned on a slice of "
                                                                   f"{data_a.cohort_id}"], model)


def run_zero_rule_transfer(data_a: CohortData, data_b: CohortData) -> TransferResult:
    _check_target(data_b)
    m = zero_rule(data_a.current_labels().values)
    n = len(data_b.participants)
    return TransferResult("zero-rule", list(data_b.participants), m.predict_proba(n=n), m.predict(n=n),
                          Lineage(frozenset({data_a.cohort_id})), [], m)


def run_one_rule_transfer(data_a: CohortData, data_b: CohortData) -> TransferResult:
    """1R SVM on prior GPA fitted on A; B rows without prior GPA fall back to 0R."""
    _check_target(data_b)
    ya = np.asarray(data_a.current_labels().values)
    ok = ~np.isnan(data_a.gpa_prior)
    m = one_rule_svm_fit(data_a.gpa_prior[ok], ya[ok])
    gb = data_b.gpa_prior
    fallback = zero_rule(ya)
    pred = np.where(np.isnan(gb), fallback.label, m.predict(np.nan_to_num(gb)))
    prob = np.where(np.isnan(gb), fallback.predict_proba(n=len(gb)), m.predict_proba(np.nan_to_num(gb)))
    notes = [] if ok.all() and not np.isnan(gb).any() else ["rows without prior GPA use the majority class"]
    return TransferResult("one-rule-svm", list(data_b.participants), prob, pred,
                          Lineage(frozenset({data_a.cohort_id})), notes, m)
