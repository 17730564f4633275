"""Acceptance criteria as runnable checks.

Each criterion returns a :class:`CriterionResult`. ``earlyrisk bench`` runs
them and the test suite asserts them. Criteria 9 and 10 generate and train on
full synthetic cohorts and take several minutes; the ``quick`` scale leaves
them out.
"""
from __future__ import annotations

import math
import tempfile
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from ._rng import substream
from .domain import HIGH, LOW

QUICK = (1, 2, 3, 4, 5, 6, 7, 8, 11)
FULL = tuple(range(1, 13))
FAIRNESS_TOL = 1e-12
SLOPE_TOL = 1e-9
GRAD_TOL = 1e-4


@dataclass
class CriterionResult:
    id: int
    title: str
    passed: bool
    summary: str
    details: dict = field(default_factory=dict)
    elapsed: float = 0.0
    limit_s: float | None = None

    def to_dict(self, timing=True) -> dict:
        d = {"id": self.id, "title": self.title, "passed": bool(self.passed), "summary": self.summary,
             "details": self.details, "limit_s": self.limit_s}
        if timing:
            d["elapsed_s"] = round(self.elapsed, 3)
        return d

    def line(self, timing=True) -> str:
        t = f" [{self.elapsed:.1f} s]" if timing else ""
        return f"{'PASS' if self.passed else 'FAIL'} {self.id:02d} {self.title}: {self.summary}{t}"


# ---------------------------------------------------------------------------
# 1. fairness measures vs an independent bit-count oracle


def _bit_rows(n):
    m = np.arange(1 << n, dtype=np.uint16)
    return m, ((m[:, None] >> np.arange(n, dtype=np.uint16)) & 1).astype(bool)


def _oracle_ratio(num_k, num_n, den_k, den_n):
    """(num_k / num_n) / (den_k / den_n) from counts; 0/0 -> 1, x/0 -> inf."""
    with np.errstate(divide="ignore", invalid="ignore"):
        r = (num_k * den_n) / (num_n * den_k)
    return np.where(den_k == 0, np.where(num_k == 0, 1.0, np.inf), r)


def _compare(impl, oracle, defined_oracle):
    """Max absolute error and mismatch count between implementation and oracle arrays."""
    diff, ratio, signed, defined = impl
    shape = np.shape(diff)
    odiff, oratio = np.broadcast_to(oracle[0], shape), np.broadcast_to(oracle[1], shape)
    osigned = None if oracle[2] is None else np.broadcast_to(oracle[2], shape)
    defined_oracle = np.broadcast_to(defined_oracle, shape)
    bad = int(np.sum(defined != defined_oracle))
    d = defined_oracle
    err = 0.0
    if d.any():
        e1 = np.abs(diff[d] - odiff[d])
        inf_i, inf_o = np.isinf(ratio[d]), np.isinf(oratio[d])
        bad += int(np.sum(inf_i != inf_o))
        fin = ~inf_i & ~inf_o
        e2 = np.abs(ratio[d][fin] - oratio[d][fin])
        err = max(float(e1.max()), float(e2.max()) if e2.size else 0.0)
        if osigned is not None:
            err = max(err, float(np.abs(signed[d] - osigned[d]).max()))
    return err, bad


def criterion_1(seed=0, max_n=8, **_):
    from .eval.fairness import demographic_parity_batch, equal_opportunity_batch, equalized_odds_batch
    pc = np.bitwise_count
    worst = {"demographic_parity": 0.0, "equal_opportunity": 0.0, "equalized_odds": 0.0}
    mismatches = 0
    total = 0
    for n in range(1, max_n + 1):
        masks, rows = _bit_rows(n)
        full = np.uint16((1 << n) - 1)
        yt_m = masks[:, None]
        yp_m = masks[None, :]
        shape = (masks.size, masks.size, n)
        yt_b = np.broadcast_to(rows[:, None, :], shape)
        yp_b = np.broadcast_to(rows[None, :, :], shape)
        for g in masks:
            gp, gu = np.uint16(g), np.uint16(full ^ g)
            s = np.broadcast_to(rows[g], shape)
            total += masks.size * masks.size
            # demographic parity
            kp, ku = pc(yp_m & gp).astype(float), pc(yp_m & gu).astype(float)
            np_, nu = float(pc(gp)), float(pc(gu))
            with np.errstate(divide="ignore", invalid="ignore"):
                sd = ku / nu - kp / np_
            dfn = np.broadcast_to(np.asarray(np_ > 0 and nu > 0), (1, masks.size))
            impl = demographic_parity_batch(yp_b[:1], s[:1])
            e, b = _compare(impl, (np.abs(sd), _oracle_ratio(ku, nu, kp, np_), sd), dfn)
            worst["demographic_parity"] = max(worst["demographic_parity"], e)
            mismatches += b
            # equal opportunity and equalized odds
            pos_p, pos_u = pc(yt_m & gp).astype(float), pc(yt_m & gu).astype(float)
            neg_p, neg_u = pc(~yt_m & gp).astype(float), pc(~yt_m & gu).astype(float)
            tp_p, tp_u = pc(yp_m & yt_m & gp).astype(float), pc(yp_m & yt_m & gu).astype(float)
            fp_p = pc(yp_m & ~yt_m & gp).astype(float)
            fp_u = pc(yp_m & ~yt_m & gu).astype(float)
            with np.errstate(divide="ignore", invalid="ignore"):
                d_tpr = tp_u / pos_u - tp_p / pos_p
                d_fpr = fp_u / neg_u - fp_p / neg_p
            defined_eo = (pos_p > 0) & (pos_u > 0)
            impl = equal_opportunity_batch(yt_b, yp_b, s)
            e, b = _compare(impl, (np.abs(d_tpr), _oracle_ratio(tp_u, pos_u, tp_p, pos_p), d_tpr), defined_eo)
            worst["equal_opportunity"] = max(worst["equal_opportunity"], e)
            mismatches += b
            defined_odds = defined_eo & (neg_p > 0) & (neg_u > 0)
            odiff = np.maximum(np.abs(d_tpr), np.abs(d_fpr))
            oratio = np.minimum(_oracle_ratio(tp_u, pos_u, tp_p, pos_p),
                                _oracle_ratio(pos_u - tp_u, pos_u, pos_p - tp_p, pos_p))
            impl = equalized_odds_batch(yt_b, yp_b, s)
            e, b = _compare(impl, (odiff, oratio, None), defined_odds)
            worst["equalized_odds"] = max(worst["equalized_odds"], e)
            mismatches += b
    # the scalar record API agrees with the batch path on random draws
    from .eval.fairness import demographic_parity, equal_opportunity, equalized_odds
    rng = substream(seed, "acceptance", 1)
    rec_bad = 0
    for _ in range(300):
        n = int(rng.integers(1, 9))
        yt, yp, g = (rng.random((3, n)) < 0.5)
        for fn, batch, args in ((demographic_parity, demographic_parity_batch, (yp, g)),
                                (equal_opportunity, equal_opportunity_batch, (yt, yp, g)),
                                (equalized_odds, equalized_odds_batch, (yt, yp, g))):
            rec = fn(*args)
            d, r, _, ok = (np.asarray(v).item() for v in batch(*args))
            if rec.defined != ok or (ok and not (rec.difference == d and (rec.ratio == r))):
                rec_bad += 1
    err = max(worst.values())
    passed = mismatches == 0 and rec_bad == 0 and err <= FAIRNESS_TOL
    return passed, (f"{total} assignments (n <= {max_n}), max error {err:.1e}, "
                    f"{mismatches} definedness/inf mismatches"), {
        "assignments": total, "max_error": worst, "mismatches": mismatches, "record_mismatches": rec_bad}


# ---------------------------------------------------------------------------
# 2. reasonable-range gate


def criterion_2(**_):
    from .eval.fairness import is_reasonable
    cases = [((0.095, 0.882), True), ((0.147, 0.808), False), ((0.1, 1.0), True), ((-0.1, 1.0), True),
             ((0.1 + 1e-9, 1.0), False), ((0.0, 0.8), True), ((0.0, 1.2), True), ((0.0, 0.799), False),
             ((0.0, 1.201), False), ((0.4 - 0.3, 1.0), True), ((0.0, math.inf), False), ((math.nan, 1.0), False)]
    wrong = [c for c, want in cases if is_reasonable(*c) != want]
    return not wrong, f"{len(cases) - len(wrong)}/{len(cases)} gate cases agree", {
        "wrong": [list(map(str, c)) for c in wrong]}


# ---------------------------------------------------------------------------
# 3. constant classifier


def _zero_rule_metrics(y):
    from .eval.metrics import classification_metrics
    from .learners.baselines import zero_rule
    m = zero_rule(y)
    return classification_metrics(y, m.predict(n=len(y)), m.predict_proba(n=len(y)))


def criterion_3(seed=0, **_):
    y = np.array([HIGH] * 133 + [LOW] * 63)
    ref = _zero_rule_metrics(y)
    ok = (round(ref["accuracy"], 3) == 0.679 and ref["recall"] == 1.0 and ref["kappa"] == 0.0
          and ref["balanced_accuracy"] == 0.5)
    rng = substream(seed, "acceptance", 3)
    bad = 0
    for _ in range(300):
        n = int(rng.integers(3, 400))
        k = int(rng.integers(1, n))  # both classes present
        y = rng.permutation(np.array([HIGH] * k + [LOW] * (n - k)))
        m = _zero_rule_metrics(y)
        want_recall = 1.0 if k >= n - k else 0.0
        if not (m["recall"] == want_recall and m["kappa"] == 0.0 and m["balanced_accuracy"] == 0.5
                and m["auc"] == 0.5):
            bad += 1
    return ok and bad == 0, (f"133/196 High: accuracy {ref['accuracy']:.3f}, recall {ref['recall']:.3f}, "
                             f"kappa {ref['kappa']:.3f}, balanced {ref['balanced_accuracy']:.3f}; "
                             f"{300 - bad}/300 random cohorts agree"), {
        "reference": ref, "random_failures": bad}


# ---------------------------------------------------------------------------
# 4. gradients


def _hinge_instance(rng):
    from .learners.gradcheck import FD_STEP
    while True:
        m = int(rng.integers(3, 30))
        x = rng.uniform(0.0, 4.0, m)
        s = rng.choice([-1.0, 1.0], m)
        w, b = rng.normal(0, 2), rng.normal(0, 2)
        margin = 1.0 - s * (w * x + b)
        if np.all(np.abs(margin) > 20 * FD_STEP * (1.0 + np.abs(x))) and np.any(margin > 0):
            return w, b, x, s, float(rng.uniform(0.1, 10.0))


KINK_MARGIN = 5e-3


def cnn_kink_distance(model, x):
    """Smallest distance of any ReLU input or max-pool comparison from its kink."""
    from .learners.cnn import forward
    arch = model.arch
    _, c = forward(arch, model.trunk, model.head, x, cache=True)
    pre = c["flat"] @ model.head["d1_w"] + model.head["d1_b"]
    a1 = np.maximum(c["z1"], 0.0)
    lp, pw = arch.pooled_length, arch.pool
    win = np.sort(a1[:, :lp * pw, :].reshape(len(x), lp, pw, arch.channels), axis=2)
    gaps = win[:, :, -1, :] - win[:, :, -2, :] if pw > 1 else np.full(1, np.inf)
    gaps = gaps[win[:, :, -1, :] > 0] if pw > 1 else gaps
    return float(min(np.abs(c["z1"]).min(), np.abs(pre).min(), gaps.min() if gaps.size else np.inf))


def _cnn_instance(rng):
    """Random CNN (<= 500 parameters) and batch with every kink at least KINK_MARGIN away."""
    from .learners.cnn import Cnn1dModel, CnnArch
    while True:
        arch = CnnArch(n_days=int(rng.integers(5, 9)), n_features=int(rng.integers(2, 6)),
                       kernel=int(rng.integers(2, 4)), channels=int(rng.integers(2, 5)), pool=int(rng.integers(1, 3)),
                       hidden=int(rng.integers(3, 9)))
        model = Cnn1dModel.initialise(arch, int(rng.integers(0, 2**31)))
        if model.n_params > 500:
            continue
        nb = int(rng.integers(3, 9))
        x = rng.standard_normal((nb, arch.n_days, arch.n_features))
        y = rng.integers(0, 2, nb)
        if cnn_kink_distance(model, x) >= KINK_MARGIN:
            return model, x, y


def criterion_4(seed=0, **_):
    from .learners.gradcheck import cnn_gradient_check, hinge_gradient_check, lr_gradient_check
    rng = substream(seed, "acceptance", 4)
    errs = {"lr": [], "hinge": [], "cnn": []}
    for _ in range(20):
        m, d = int(rng.integers(5, 40)), int(rng.integers(1, 12))
        X = rng.standard_normal((m, d))
        t = rng.integers(0, 2, m).astype(float)
        errs["lr"].append(lr_gradient_check(rng.standard_normal(d), rng.normal(), X, t, float(rng.uniform(0, 1))))
        w, b, x, s, C = _hinge_instance(rng)
        errs["hinge"].append(hinge_gradient_check(w, b, x, s, C))
        model, x, y = _cnn_instance(rng)
        errs["cnn"].append(cnn_gradient_check(model, x, y))
    worst = {k: float(max(v)) for k, v in errs.items()}
    passed = all(v < GRAD_TOL for v in worst.values())
    return passed, "max relative error " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()), {
        "max_relative_error": worst, "instances": 20}


# ---------------------------------------------------------------------------
# 5. golden feature fixtures

_REQUIRED_FIXTURES = {
    "steps": "steps_", "screen": "screen_", "sleep": "sleep_", "home 3 nights": "home_three_nights",
    "home 79%": "home_79_percent_breaks_run", "attendance 50%": "attendance_half_is_absent",
    "party": "party_", "entropy": "entropy_",
}


def criterion_5(**_):
    from .fixtures import check, load_golden
    cases = load_golden()
    failed = {}
    for c in cases:
        ok, bad = check(c)
        if not ok:
            failed[c["name"]] = {k: [str(e), str(a)] for k, (e, a) in bad.items()}
    names = [c["name"] for c in cases]
    missing = [k for k, p in _REQUIRED_FIXTURES.items() if not any(n.startswith(p) for n in names)]
    passed = len(cases) >= 12 and not failed and not missing
    return passed, f"{len(cases) - len(failed)}/{len(cases)} golden cases reproduce", {
        "failed": failed, "missing_kinds": missing}


# ---------------------------------------------------------------------------
# 6. breakpoint oracle


def _exact_fit(xs, ys):
    """Least-squares slope and SSE in exact rational arithmetic."""
    n = len(xs)
    xm = sum(xs, Fraction(0)) / n
    ym = sum(ys, Fraction(0)) / n
    sxx = sum((x - xm) ** 2 for x in xs)
    slope = sum((x - xm) * (y - ym) for x, y in zip(xs, ys)) / sxx
    sse = sum((y - ym - slope * (x - xm)) ** 2 for x, y in zip(xs, ys))
    return slope, sse


def brute_force_breakpoint(values):
    """(breakpoint or None, pre slope, post slope) by exhaustive exact search."""
    ys = [Fraction(float(v)) for v in values]
    xs = [Fraction(i) for i in range(7)]
    best = None
    for b in range(1, 6):
        s1, e1 = _exact_fit(xs[:b + 1], ys[:b + 1])
        s2, e2 = _exact_fit(xs[b:], ys[b:])
        if best is None or e1 + e2 < best[0]:
            best = (e1 + e2, b, s1, s2)
    _, b, s1, s2 = best
    if s1 * s2 < 0:
        return b, float(s1), float(s2)
    return None, float(s1), float(s2)


def _breakpoint_grid(rng, n):
    x = np.arange(7.0)
    rows, linear = [], []
    k = n // 8
    rows += list(rng.standard_normal((2 * k, 7)))
    for _ in range(2 * k):  # noisy V and inverted V shapes
        b = int(rng.integers(1, 6))
        s1, s2 = rng.uniform(0.3, 3.0), -rng.uniform(0.3, 3.0)
        sign = rng.choice([-1.0, 1.0])
        y = np.where(x <= b, s1 * (x - b), s2 * (x - b)) * sign + rng.normal(0, 0.2, 7)
        rows.append(y)
    rows += list(rng.integers(0, 5, (2 * k, 7)).astype(float))  # many exact ties
    for _ in range(n - 6 * k):
        slope = rng.choice([-1.0, 1.0]) * rng.uniform(0.1, 3.0) if rng.random() < 0.8 else 0.0
        rows.append(rng.integers(-5, 6) + slope * x if rng.random() < 0.5 else np.round(rng.normal(), 2) + slope * x)
        linear.append(len(rows) - 1)
    return np.array(rows), linear


def criterion_6(seed=0, n_series=2000, **_):
    from .features.change import behavioral_change_batch
    rng = substream(seed, "acceptance", 6)
    y, linear = _breakpoint_grid(rng, n_series)
    got = behavioral_change_batch(y)
    wrong_day = 0
    slope_err = 0.0
    found = 0
    for i, row in enumerate(y):
        b, s1, s2 = brute_force_breakpoint(row)
        gb = got["bkp_day"][i]
        if (b is None) != np.isnan(gb) or (b is not None and int(gb) != b):
            wrong_day += 1
            continue
        if b is not None:
            found += 1
            slope_err = max(slope_err, abs(got["slope_pre"][i] - s1), abs(got["slope_post"][i] - s2))
    linear_with_break = int(np.sum(~np.isnan(got["bkp_day"][linear])))
    passed = wrong_day == 0 and slope_err <= SLOPE_TOL and linear_with_break == 0
    return passed, (f"{len(y) - wrong_day}/{len(y)} breakpoints match ({found} directional), "
                    f"slope error {slope_err:.1e}, {linear_with_break}/{len(linear)} linear series flagged"), {
        "series": len(y), "wrong_breakpoints": wrong_day, "max_slope_error": slope_err,
        "linear_flagged": linear_with_break}


# ---------------------------------------------------------------------------
# 7. no leakage


def _bitwise_equal(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return a.shape == b.shape and a.dtype == b.dtype and a.tobytes() == b.tobytes()


def _toy_cohort(cohort_id, n, n_features, rng, seal=False, prior=True, invert=False):
    import datetime as dt

    from .domain import DailyFeatureMatrix, LabelSet
    from .pipelines.data import make_cohort_data
    pids = [f"{cohort_id}{i:03d}" for i in range(n)]
    days = [dt.date(2018, 3, 26) + dt.timedelta(days=d) for d in range(7)]
    z = rng.standard_normal(n)
    vals = rng.standard_normal((n, 7, n_features)) + 0.8 * z[:, None, None] * (np.arange(n_features) < 3)
    vals[rng.random(vals.shape) < 0.05] = np.nan
    daily = DailyFeatureMatrix.from_values(pids, days, [f"f{j:02d}__full__x" for j in range(n_features)], vals)
    gpa = np.clip(np.round(3.4 - 0.4 * z, 2), 0, 4)
    gpa_prior = np.clip(np.round(3.4 - 0.4 * (0.6 * z + 0.8 * rng.standard_normal(n)), 2), 0, 4)
    if not prior:
        gpa_prior = np.full(n, np.nan)
    if invert:  # swap High and Low current labels
        gpa = np.where(gpa > 3.2, 3.0, 3.5)
    return make_cohort_data(cohort_id, daily, LabelSet(tuple(pids), gpa, gpa_prior), seal=seal)


def criterion_7(seed=0, **_):
    from .errors import LeakageError, LineageError
    from .learners.cnn import TrainConfig
    from .learners.mtl import MtlModel, mtl_fit
    from .learners.cnn import CnnArch
    from .pipelines.lr import LrPipelineConfig, run_fold
    from .pipelines.mtl import TransferConfig, run_mtl_pipeline
    from .seal import CURRENT, TaggedLabels, require_trainable

    rng = substream(seed, "acceptance", 7)
    # LR folds: held-out rows cannot move any training statistic
    n, f = 40, 30
    X = rng.standard_normal((n, f))
    X[rng.random(X.shape) < 0.1] = np.nan
    y = np.where(rng.random(n) < 0.3, LOW, HIGH)
    t = np.where(y == HIGH, 3.6, 2.9) + rng.normal(0, 0.2, n)
    names = [f"x{j}" for j in range(f)]
    cfg = LrPipelineConfig(cfs_grid=(0.1, 0.2, 0.3))
    pids = [f"P{i:03d}" for i in range(n)]
    lr_bad = []
    n_perturb = 0
    for fold in range(8):
        test = np.array([fold])
        train = np.array([i for i in range(n) if i != fold])
        base = run_fold(fold, X, y, t, names, train, test, cfg, pids)
        for trial in range(3):
            Xp = X.copy()
            Xp[test] = rng.normal(0, 100, (1, f))
            Xp[test, rng.random(f) < 0.3] = np.nan
            other = run_fold(fold, Xp, y, t, names, train, test, cfg, pids)
            n_perturb += 1
            for k in ("impute", "mean", "sd"):
                if not _bitwise_equal(base.stats[k], other.stats[k]):
                    lr_bad.append(f"fold {fold} trial {trial} {k}")
            if base.stats["kept"] != other.stats["kept"]:
                lr_bad.append(f"fold {fold} trial {trial} kept")

    # MTL: the seal on B's current labels stays closed and lineage proves it
    a = _toy_cohort("A", 40, 6, rng)
    rng_b = substream(seed, "acceptance", 7, "b")
    b = _toy_cohort("B", 30, 6, rng_b, seal=True)
    tc = TransferConfig(train=TrainConfig(epochs=4, learning_rate=1e-3), seed=seed)
    res = run_mtl_pipeline(a, b, tc)
    checks = {
        "seal_unopened": not b.sealed.opened,
        "lineage_current_is_A": res.lineage.current == frozenset({"A"}),
        "lineage_prior_has_B": "B" in res.lineage.prior,
    }
    try:
        res.lineage.check_can_score("B")
        checks["scorable_on_B"] = True
    except LineageError:
        checks["scorable_on_B"] = False
    try:
        res.lineage.check_can_score("A")
        checks["refuses_A"] = False
    except LineageError:
        checks["refuses_A"] = True
    # relabelling B's sealed current labels cannot change training
    b2 = _toy_cohort("B", 30, 6, substream(seed, "acceptance", 7, "b"), seal=True, invert=True)
    res2 = run_mtl_pipeline(a, b2, tc)
    checks["labels_do_not_matter"] = _bitwise_equal(res.prob_low, res2.prob_low)

    def raises(fn):
        try:
            fn()
        except LeakageError:
            return True
        return False

    b_open = _toy_cohort("B", 30, 6, substream(seed, "acceptance", 7, "b"))
    checks["unsealed_target_refused"] = raises(lambda: run_mtl_pipeline(a, b_open, tc))
    checks["sealed_to_trainer_refused"] = raises(lambda: require_trainable(b.sealed))
    checks["sealed_to_array_refused"] = raises(lambda: np.asarray(b.sealed))
    arch = CnnArch(n_days=7, n_features=6, channels=2, hidden=4)
    xb = np.zeros((30, 7, 6))
    checks["current_B_in_secondary_refused"] = raises(lambda: mtl_fit(
        MtlModel.initialise(arch, 0), (xb, TaggedLabels(np.arange(30) % 2, CURRENT, "A")),
        (xb, TaggedLabels(np.arange(30) % 2, CURRENT, "B")), TrainConfig(epochs=1), eval_cohorts=("B",)))
    checks["seal_still_unopened"] = not b.sealed.opened and not b2.sealed.opened
    failed = [k for k, v in checks.items() if not v]
    passed = not lr_bad and not failed
    clean = n_perturb - len({tuple(x.split()[1:4:2]) for x in lr_bad})
    return passed, (f"{clean}/{n_perturb} LR perturbations leave training statistics bit-identical; "
                    f"{len(checks) - len(failed)}/{len(checks)} seal checks hold"), {
        "lr_violations": lr_bad, "seal_checks": checks}


# ---------------------------------------------------------------------------
# 8. SMOTE and duplication


def _on_minority_segment(s, minority, tol=1e-9):
    """True when ``s`` lies on a segment between two minority rows (brute force)."""
    m = minority.shape[0]
    for i in range(m):
        d = minority - minority[i]
        dd = (d * d).sum(axis=1)
        v = s - minority[i]
        with np.errstate(divide="ignore", invalid="ignore"):
            u = np.where(dd > 0, (d @ v) / dd, 0.0)
        u = np.clip(u, 0.0, 1.0)
        resid = np.abs(minority[i] + u[:, None] * d - s).max(axis=1)
        if np.any(resid <= tol * (1.0 + np.abs(s).max())):
            return True
    return False


def criterion_8(seed=0, **_):
    from .pipelines.cnn import duplicate_balance
    from .pipelines.lr import smote
    rng = substream(seed, "acceptance", 8)
    problems = []
    n_synth = 0
    for trial in range(30):
        n_maj, n_min = int(rng.integers(8, 60)), int(rng.integers(2, 8))
        d = int(rng.integers(1, 6))
        X = rng.standard_normal((n_maj + n_min, d))
        y = np.array([HIGH] * n_maj + [LOW] * n_min)
        perm = rng.permutation(len(y))
        X, y = X[perm], y[perm]
        k = int(rng.integers(1, 7))
        s = int(rng.integers(0, 2**31))
        xb, yb, info = smote(X, y, k=k, seed=s)
        xb2, yb2, _ = smote(X, y, k=k, seed=s)
        if np.sum(yb == HIGH) != np.sum(yb == LOW):
            problems.append(f"smote {trial}: counts")
        if not (_bitwise_equal(xb, xb2) and _bitwise_equal(yb, yb2)):
            problems.append(f"smote {trial}: not deterministic")
        if not _bitwise_equal(xb[:len(y)], X):
            problems.append(f"smote {trial}: originals changed")
        minority = X[y == LOW]
        kk = min(k, len(minority) - 1)
        dist = ((minority[:, None, :] - minority[None, :, :]) ** 2).sum(-1)
        for j, row in enumerate(xb[len(y):]):
            n_synth += 1
            if not _on_minority_segment(row, minority):
                problems.append(f"smote {trial}: row {j} off every minority segment")
            # the partner is among the k nearest minority neighbours of the base
            bi = int(np.flatnonzero(np.all(minority == X[info["base"][j]], axis=1))[0])
            ni = int(np.flatnonzero(np.all(minority == X[info["neighbor"][j]], axis=1))[0])
            order = np.sort(np.delete(dist[bi], bi))
            if dist[bi, ni] > order[kk - 1] + 1e-12:
                problems.append(f"smote {trial}: row {j} partner is not a {kk}-nearest neighbour")
        xd, yd, dup = duplicate_balance(X, y, seed=s)
        xd2, yd2, _ = duplicate_balance(X, y, seed=s)
        if np.sum(yd == HIGH) != np.sum(yd == LOW):
            problems.append(f"duplicate {trial}: counts")
        if not (_bitwise_equal(xd, xd2) and _bitwise_equal(yd, yd2)):
            problems.append(f"duplicate {trial}: not deterministic")
        extra = xd[len(y):]
        if not all(np.any(np.all(minority == r, axis=1)) for r in extra):
            problems.append(f"duplicate {trial}: a copy is not a minority row")
    return not problems, f"30 draws, {n_synth} synthetic rows, {len(problems)} violations", {
        "violations": problems[:20]}


# ---------------------------------------------------------------------------
# 9. planted-signal recovery end to end

C9_COHORT = {"seed": 1, "n_participants": 200, "n_days": 7}
C9_MIN_LR_AUC = 0.85
C9_MIN_CNN_AUC = 0.80
C9_MIN_FAMILIES = 3


def criterion_9(n_jobs=1, **_):
    from .eval.importance import importance_ranking
    from .eval.metrics import auc_score
    from .eval.planted import planted_recovery
    from .pipelines.cnn import CnnPipelineConfig, run_cnn_pipeline
    from .pipelines.data import cohort_to_data
    from .pipelines.lr import LrPipelineConfig, run_lr_pipeline
    from .synth import CohortConfig, generate_cohort

    t0 = time.perf_counter()
    cohort = generate_cohort(CohortConfig(**C9_COHORT))
    data = cohort_to_data(cohort, "P")
    t_gen = time.perf_counter() - t0
    n_features = len(data.daily.features)
    lr = run_lr_pipeline(data, LrPipelineConfig(n_jobs=n_jobs))
    _, prob, _, _ = lr.predictions()
    y = np.asarray(data.current_labels().values)
    lr_auc = auc_score(y == LOW, prob)
    rec = planted_recovery(importance_ranking(lr.folds), cohort.config.planted_effects, top=10)
    n_rec = sum(v["recovered"] for v in rec.values())
    cnn = run_cnn_pipeline(data, CnnPipelineConfig(n_jobs=n_jobs))
    cnn_aucs = [r.metrics["auc"] for r in cnn.repeats]
    cnn_auc = float(np.mean(cnn_aucs))
    passed = lr_auc >= C9_MIN_LR_AUC and n_rec >= C9_MIN_FAMILIES and cnn_auc >= C9_MIN_CNN_AUC
    return passed, (f"LR LOSO AUC {lr_auc:.3f}, {n_rec}/5 planted families in top 10, "
                    f"CNN mean AUC {cnn_auc:.3f}"), {
        "lr_auc": lr_auc, "recovered": rec, "cnn_auc": cnn_aucs, "cnn_mean_auc": cnn_auc,
        "n_daily_features": n_features, "generation_s": round(t_gen, 1)}


# ---------------------------------------------------------------------------
# 10. cross-cohort ordering

C10_SEEDS = (1, 2, 3, 4, 5)
C10_SHIFT = 1.0
C10_N = 100
C10_REPEATS = 5
C10_SEED_OFFSET = 1000


def cohort_pair_data(seed, n=C10_N, shift=C10_SHIFT):
    """Labelled cohort A and sealed cohort B generated as a shifted pair."""
    from .pipelines.data import cohort_to_data
    from .synth import CohortConfig, generate_cohort_pair
    a, b = generate_cohort_pair(CohortConfig(seed=seed, n_participants=n, id_prefix="A"),
                                CohortConfig(seed=seed + C10_SEED_OFFSET, n_participants=n, id_prefix="B"),
                                shift=shift)
    return cohort_to_data(a, "A"), cohort_to_data(b, "B", seal=True)


def criterion_10(**_):
    from .eval.report import generalizability_report
    from .pipelines.mtl import TransferConfig, run_cnn_transfer, run_lr_transfer, run_mtl_pipeline

    per_seed = {}
    seal_ok = True
    for s in C10_SEEDS:
        a, b = cohort_pair_data(s)
        results = {"mtl": [], "cnn": []}
        for r in range(C10_REPEATS):
            for name, fn in (("mtl", run_mtl_pipeline), ("cnn", run_cnn_transfer)):
                res = fn(a, b, TransferConfig(seed=r))
                results[name].append(res)
        lr = run_lr_transfer(a, b)
        seal_ok &= not b.sealed.opened
        score = {k: [generalizability_report(r.pred, r.prob_low, b.sealed, r.lineage)["metrics"]["balanced_accuracy"]
                     for r in v] for k, v in results.items()}
        score["lr"] = [generalizability_report(lr.pred, lr.prob_low, b.sealed, lr.lineage)["metrics"][
            "balanced_accuracy"]]
        per_seed[s] = {k: float(np.mean(v)) for k, v in score.items()}
    med = {k: float(np.median([per_seed[s][k] for s in C10_SEEDS])) for k in ("mtl", "cnn", "lr")}
    passed = med["mtl"] >= med["cnn"] and seal_ok
    return passed, (f"median balanced accuracy on B: MTL {med['mtl']:.3f}, CNN {med['cnn']:.3f} "
                    f"(LR {med['lr']:.3f}); shift {C10_SHIFT}, {len(C10_SEEDS)} seeds x {C10_REPEATS} repeats"), {
        "per_seed": {str(k): v for k, v in per_seed.items()}, "median": med, "seal_unopened_in_training": seal_ok,
        "mtl_median_at_least_0.65": med["mtl"] >= 0.65}


# ---------------------------------------------------------------------------
# 11. transition breakdown


def criterion_11(seed=0, **_):
    from .domain import labels_from_gpa
    from .eval.transitions import CATEGORIES, transition_breakdown
    from .learners.baselines import zero_rule
    from .synth import CohortConfig, generate_labels
    labels = generate_labels(CohortConfig(seed=seed + 1, persistence=0.6))
    prior = labels_from_gpa(labels.gpa_prior)
    cur = labels_from_gpa(labels.gpa_current)
    pred = zero_rule(cur).predict(n=len(cur))
    tb = transition_breakdown(prior, cur, pred)
    members = {"stay_high": (prior == HIGH) & (cur == HIGH), "stay_low": (prior == LOW) & (cur == LOW),
               "change_to_high": (prior == LOW) & (cur == HIGH), "change_to_low": (prior == HIGH) & (cur == LOW)}
    cover = np.sum(list(members.values()), axis=0)
    partition = bool(np.all(cover == 1)) and tb.total == len(cur) and tb.unclassified == 0
    counts_ok = all(tb.counts[c] == int(members[c].sum()) for c in CATEGORIES)
    acc = tb.accuracies
    analytic = {"stay_high": 1.0, "stay_low": 0.0, "change_to_high": 1.0, "change_to_low": 0.0}
    acc_ok = all(acc[c] == analytic[c] for c in CATEGORIES)
    nonempty = all(tb.counts[c] > 0 for c in CATEGORIES)
    # participants missing a label drop out of every category
    prior2 = prior.copy()
    prior2[: 10] = -1
    tb2 = transition_breakdown(prior2, cur, pred)
    missing_ok = tb2.unclassified == 10 and tb2.total == len(cur) - 10
    passed = partition and counts_ok and acc_ok and nonempty and missing_ok
    return passed, ("0R accuracies " + "/".join(f"{acc[c]:.1f}" for c in CATEGORIES)
                    + f"; counts {[tb.counts[c] for c in CATEGORIES]} sum to {tb.total} of {len(cur)}"), {
        "counts": tb.counts, "accuracy": acc, "partition": partition, "missing_labels_excluded": missing_ok}


# ---------------------------------------------------------------------------
# 12. bench reproducibility from its manifest

C12_CRITERIA = [2, 3, 5, 6, 8, 11]


def bench_reproduces(workdir, criteria=C12_CRITERIA, seed=0):
    """Run ``bench`` then re-execute it from its manifest; return (equal, first, second) output hashes."""
    import json

    from .cli import main
    workdir = Path(workdir)
    cfg = workdir / "bench.json"
    cfg.write_text(json.dumps({"seed": seed, "scale": "quick", "criteria": list(criteria)}))
    first, second = workdir / "run1", workdir / "run2"
    code1 = main(["bench", "--config", str(cfg), "--out", str(first)])
    code2 = main(["bench", "--config", str(first / "manifest.json"), "--out", str(second)])
    h1 = json.loads((first / "manifest.json").read_text())["outputs"]
    h2 = json.loads((second / "manifest.json").read_text())["outputs"]
    return code1 == 0 and code2 == 0 and h1 == h2 and bool(h1), h1, h2


def criterion_12(seed=0, **_):
    with tempfile.TemporaryDirectory() as tmp:
        ok, h1, h2 = bench_reproduces(tmp, seed=seed)
    return ok, f"{len(h1)} output hashes reproduced from the manifest" if ok else "output hashes differ", {
        "first": h1, "second": h2}


# ---------------------------------------------------------------------------

CRITERIA = {
    1: ("fairness oracle equivalence", criterion_1, 60.0),
    2: ("reasonable-range gate", criterion_2, None),
    3: ("constant-classifier identities", criterion_3, None),
    4: ("gradient correctness", criterion_4, 120.0),
    5: ("golden feature fixtures", criterion_5, None),
    6: ("breakpoint oracle", criterion_6, None),
    7: ("no-leakage metamorphic test", criterion_7, None),
    8: ("SMOTE and duplication postconditions", criterion_8, None),
    9: ("planted-signal recovery", criterion_9, 900.0),
    10: ("generalizability ordering", criterion_10, None),
    11: ("transition breakdown", criterion_11, None),
    12: ("bench reproducibility", criterion_12, None),
}


def default_criteria(scale="quick"):
    return list(QUICK if scale == "quick" else FULL)


def run_criterion(cid: int, scale="quick", seed=0, n_jobs=1) -> CriterionResult:
    title, fn, limit = CRITERIA[cid]
    t0 = time.perf_counter()
    passed, summary, details = fn(seed=seed, n_jobs=n_jobs, scale=scale)
    elapsed = time.perf_counter() - t0
    if limit is not None and elapsed > limit:
        passed = False
        summary += f"; runtime {elapsed:.0f} s exceeds {limit:.0f} s"
    return CriterionResult(cid, title, bool(passed), summary, details, elapsed, limit)
