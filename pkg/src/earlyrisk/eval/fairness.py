"""Group fairness measures over a binary protected indicator.

The favourable outcome is a High prediction (``y_pred == 1``). Each measure
reports an absolute difference and a ratio taken as unprotected over
protected. A ratio with a zero denominator is ``inf`` (``1.0`` when the
numerator is zero as well, since the two rates are then equal).

All rate computations broadcast over leading axes so that many assignments
can be evaluated in one call.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

DIFF_LIMIT = 0.1
RATIO_RANGE = (0.8, 1.2)
GATE_TOL = 1e-12  # absorbs binary rounding of rates such as 0.4 - 0.3

FAIRNESS_METRICS = ("demographic_parity", "equalized_odds", "equal_opportunity")


def is_reasonable(difference, ratio) -> bool:
    """Difference within [-0.1, 0.1] and ratio within [0.8, 1.2]."""
    if difference is None or ratio is None or np.isnan(difference) or np.isnan(ratio):
        return False
    return bool(abs(difference) <= DIFF_LIMIT + GATE_TOL
                and RATIO_RANGE[0] - GATE_TOL <= ratio <= RATIO_RANGE[1] + GATE_TOL)


@dataclass(frozen=True)
class FairnessRecord:
    trait: str
    metric: str
    difference: float  # absolute; NaN when undefined
    ratio: float
    signed_difference: float  # unprotected minus protected
    reason: str | None = None

    @property
    def defined(self):
        return self.reason is None

    @property
    def reasonable(self):
        return self.defined and is_reasonable(self.difference, self.ratio)

    def to_dict(self):
        d = asdict(self)
        d["reasonable"] = self.reasonable
        for k in ("difference", "ratio", "signed_difference"):
            v = d[k]
            d[k] = None if v is None or np.isnan(v) else (("inf" if v > 0 else "-inf") if np.isinf(v) else float(v))
        return d


# ---------------------------------------------------------------------------
# batched rate arithmetic


def _ratio(num, den):
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = num / den
    r = np.where(den == 0, np.where(num == 0, 1.0, np.inf), r)
    return r


def _rate(hit, cond):
    """P(hit | cond) along the last axis; NaN where ``cond`` is empty."""
    n = cond.sum(axis=-1)
    k = (hit & cond).sum(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(n > 0, k / np.where(n > 0, n, 1), np.nan), n


def _prep(y_true, y_pred, group):
    yp = np.asarray(y_pred).astype(bool)
    s = np.asarray(group).astype(bool)
    yt = None if y_true is None else np.asarray(y_true).astype(bool)
    return yt, yp, s


def demographic_parity_batch(y_pred, group):
    """Arrays ``(difference, ratio, signed, defined)`` over leading axes."""
    _, yp, s = _prep(None, y_pred, group)
    pp, n_p = _rate(yp, s)
    pu, n_u = _rate(yp, ~s)
    defined = (n_p > 0) & (n_u > 0)
    signed = pu - pp
    return np.abs(signed), _ratio(pu, pp), signed, defined


def equal_opportunity_batch(y_true, y_pred, group):
    yt, yp, s = _prep(y_true, y_pred, group)
    tpr_p, n_p = _rate(yp, yt & s)
    tpr_u, n_u = _rate(yp, yt & ~s)
    defined = (n_p > 0) & (n_u > 0)
    signed = tpr_u - tpr_p
    return np.abs(signed), _ratio(tpr_u, tpr_p), signed, defined


def equalized_odds_batch(y_true, y_pred, group, ratio_pair="tpr_fnr"):
    """Difference ``max(|TPR gap|, |FPR gap|)``; ratio ``min`` of the TPR and FNR ratios.

    ``ratio_pair="tpr_fpr"`` switches the second ratio to FPR.
    """
    yt, yp, s = _prep(y_true, y_pred, group)
    tpr_p, np_pos = _rate(yp, yt & s)
    tpr_u, nu_pos = _rate(yp, yt & ~s)
    fpr_p, np_neg = _rate(yp, ~yt & s)
    fpr_u, nu_neg = _rate(yp, ~yt & ~s)
    defined = (np_pos > 0) & (nu_pos > 0) & (np_neg > 0) & (nu_neg > 0)
    d_tpr = tpr_u - tpr_p
    d_fpr = fpr_u - fpr_p
    signed = np.where(np.abs(d_tpr) >= np.abs(d_fpr), d_tpr, d_fpr)
    if ratio_pair == "tpr_fnr":
        second = _ratio(1.0 - tpr_u, 1.0 - tpr_p)
    elif ratio_pair == "tpr_fpr":
        second = _ratio(fpr_u, fpr_p)
    else:
        raise ValueError(f"unknown ratio pair {ratio_pair!r}")
    ratio = np.minimum(_ratio(tpr_u, tpr_p), second)
    return np.abs(signed), ratio, signed, defined


# ---------------------------------------------------------------------------
# scalar records


def _record(trait, metric, out, reason_if_undefined):
    diff, ratio, signed, defined = (np.asarray(v).item() for v in out)
    if not defined:
        return FairnessRecord(trait, metric, np.nan, np.nan, np.nan, reason_if_undefined)
    return FairnessRecord(trait, metric, float(diff), float(ratio), float(signed))


def _check(y_pred, group, y_true=None):
    if np.asarray(y_pred).ndim != 1 or np.shape(y_pred) != np.shape(group):
        raise ValueError("predictions and group indicator must be aligned vectors")
    if y_true is not None and np.shape(y_true) != np.shape(y_pred):
        raise ValueError("labels and predictions must be aligned")


def demographic_parity(y_pred, group, trait="") -> FairnessRecord:
    _check(y_pred, group)
    return _record(trait, "demographic_parity", demographic_parity_batch(y_pred, group), "empty_group")


def equal_opportunity(y_true, y_pred, group, trait="") -> FairnessRecord:
    _check(y_pred, group, y_true)
    return _record(trait, "equal_opportunity", equal_opportunity_batch(y_true, y_pred, group),
                   "group_without_actual_positives")


def equalized_odds(y_true, y_pred, group, trait="", ratio_pair="tpr_fnr") -> FairnessRecord:
    _check(y_pred, group, y_true)
    return _record(trait, "equalized_odds", equalized_odds_batch(y_true, y_pred, group, ratio_pair),
                   "group_without_both_outcomes")


def fairness_records(y_true, y_pred, traits: dict, ratio_pair="tpr_fnr") -> list:
    """All three measures for every trait in ``{trait: protected indicator}``."""
    out = []
    for t in sorted(traits):
        g = np.asarray(traits[t], dtype=bool)
        out.append(demographic_parity(y_pred, g, t))
        out.append(equalized_odds(y_true, y_pred, g, t, ratio_pair))
        out.append(equal_opportunity(y_true, y_pred, g, t))
    return out
