"""Weekly aggregation and behavioural-change (slope / breakpoint) features."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..domain import DailyFeatureMatrix, day_number
from .highlevel import weekday_of

WEEKDAYS = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")
FIRST_HALF = slice(0, 3)  # Mon-Wed, Thursday excluded
SECOND_HALF = slice(3, 7)  # Thu-Sun, Thursday included
CANDIDATE_BREAKS = (1, 2, 3, 4, 5)  # Tue..Sat
TIE_RTOL = 1e-9
WEEKLY_AGGS = ("mean", "std", "slope1", "slope2", "slope_all", "bkp_day", "slope_pre", "slope_post")


@dataclass(frozen=True)
class BehavioralChange:
    first_half_slope: float
    second_half_slope: float
    slope_all: float
    breakpoint_day: int | None  # 0 = Monday
    slope_before: float
    slope_after: float

    @property
    def breakpoint_name(self):
        return None if self.breakpoint_day is None else WEEKDAYS[self.breakpoint_day]


def _lsq(y, x):
    """Masked least-squares slope and SSE along the last axis; NaN y are missing.

    Returns (slope, sse, n_observed).
    """
    obs = ~np.isnan(y)
    n = obs.sum(axis=-1)
    xb = np.broadcast_to(x, y.shape)
    with np.errstate(invalid="ignore", divide="ignore"):
        xm = np.where(obs, xb, 0.0).sum(-1) / n
        ym = np.where(obs, y, 0.0).sum(-1) / n
        dx = np.where(obs, xb - xm[..., None], 0.0)
        dy = np.where(obs, y - ym[..., None], 0.0)
        sxx = (dx * dx).sum(-1)
        slope = (dx * dy).sum(-1) / sxx
        resid = dy - slope[..., None] * dx
        sse = np.where(obs, resid * resid, 0.0).sum(-1)
    bad = n < 2
    slope = np.where(bad, np.nan, slope)
    sse = np.where(bad, np.nan, sse)
    return slope, sse, n


def _zero_small(slope, y):
    scale = 1.0 + np.nanmax(np.abs(np.where(np.isnan(y), 0.0, y)), axis=-1)
    return np.where(np.abs(slope) <= 1e-12 * scale, 0.0, slope)


def behavioral_change_batch(y):
    """Vectorised behavioural change over rows of ``y`` ([N, 7], Monday first).

    Returns a dict of [N] arrays keyed like :data:`WEEKLY_AGGS` minus the
    level aggregates; ``bkp_day`` is NaN when no directional change is found.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 2 or y.shape[1] != 7:
        raise ValueError("expected [N, 7] weekly series")
    x = np.arange(7, dtype=float)
    s1, _, _ = _lsq(y[:, FIRST_HALF], x[FIRST_HALF])
    s2, _, _ = _lsq(y[:, SECOND_HALF], x[SECOND_HALF])
    sa, _, _ = _lsq(y, x)
    sses, pre, post = [], [], []
    for b in CANDIDATE_BREAKS:
        sb, eb, _ = _lsq(y[:, :b + 1], x[:b + 1])
        sf, ef, _ = _lsq(y[:, b:], x[b:])
        sses.append(eb + ef)
        pre.append(sb)
        post.append(sf)
    sses = np.stack(sses, axis=1)
    pre = _zero_small(np.stack(pre, axis=1), y[:, None, :])
    post = _zero_small(np.stack(post, axis=1), y[:, None, :])
    valid = ~np.isnan(sses)
    best_sse = np.where(valid, sses, np.inf).min(axis=1)
    tied = valid & (sses <= best_sse[:, None] + TIE_RTOL * (1.0 + best_sse[:, None]))
    has = tied.any(axis=1)
    j = np.where(has, np.argmax(tied, axis=1), 0)
    rows = np.arange(len(y))
    sp, sq = pre[rows, j], post[rows, j]
    directional = has & (sp * sq < 0)
    return {
        "slope1": _zero_small(s1, y),
        "slope2": _zero_small(s2, y),
        "slope_all": _zero_small(sa, y),
        "bkp_day": np.where(directional, np.asarray(CANDIDATE_BREAKS, dtype=float)[j], np.nan),
        "slope_pre": np.where(directional, sp, np.nan),
        "slope_post": np.where(directional, sq, np.nan),
    }


def behavioral_change(values) -> BehavioralChange:
    """Slopes and breakpoint of one Monday-first week of daily values (NaN = missing).

    First half is Mon-Wed, second half Thu-Sun. The breakpoint is the
    interior day (Tue-Sat) minimising the summed squared error of two line
    fits that share that day; it is reported only when the two slopes have
    opposite signs.
    """
    r = behavioral_change_batch(np.asarray(values, dtype=float).reshape(1, 7))
    bd = r["bkp_day"][0]
    return BehavioralChange(float(r["slope1"][0]), float(r["slope2"][0]), float(r["slope_all"][0]),
                            None if np.isnan(bd) else int(bd), float(r["slope_pre"][0]), float(r["slope_post"][0]))


def weekly_aggregate(values):
    """(mean, sample std) over observed days; std needs two observations."""
    v = np.asarray(values, dtype=float)
    v = v[~np.isnan(v)]
    if v.size == 0:
        return np.nan, np.nan
    return float(v.mean()), (float(v.std(ddof=1)) if v.size >= 2 else np.nan)


def week_tensor(m: DailyFeatureMatrix, week_start=None):
    """[P, 7, F] Monday-first values of the week starting at ``week_start`` (a date)."""
    dn = [day_number(d) for d in m.days]
    if week_start is None:
        first = dn[0]
        start = first - weekday_of(first)
    else:
        start = day_number(week_start)
        if weekday_of(start) != 0:
            raise ValueError("week_start must be a Monday")
    out = np.full((len(m.participants), 7, len(m.features)), np.nan)
    for i, d in enumerate(dn):
        k = d - start
        if 0 <= k < 7:
            out[:, k, :] = m.values[:, i, :]
    return out


def weekly_features(m: DailyFeatureMatrix, week_start=None):
    """Weekly table for the LR approach: ``(names, values[P, F*8])``.

    Columns are ``{daily}__{agg}`` for every aggregate in :data:`WEEKLY_AGGS`.
    """
    w = week_tensor(m, week_start)
    p, _, f = w.shape
    flat = np.moveaxis(w, 1, 2).reshape(p * f, 7)
    obs = ~np.isnan(flat)
    n = obs.sum(1)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(obs, flat, 0).sum(1) / n
        var = np.where(obs, (flat - mean[:, None]) ** 2, 0).sum(1) / (n - 1)
    mean = np.where(n >= 1, mean, np.nan)
    std = np.where(n >= 2, np.sqrt(var), np.nan)
    change = behavioral_change_batch(flat)
    cols = {"mean": mean, "std": std, **change}
    names, blocks = [], []
    for agg in WEEKLY_AGGS:
        blocks.append(cols[agg].reshape(p, f))
        names.extend(f"{feat}__{agg}" for feat in m.features)
    return names, np.concatenate(blocks, axis=1)
