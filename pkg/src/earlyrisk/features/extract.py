"""Daily feature extraction for one participant and for a whole cohort.

Every feature is named ``{base}__{epoch}``. Sleep features exist only for
the full day and use the noon-to-noon window ending at noon of that day.
A sensor with no events on a day has all of its features masked that day.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from ..domain import (
    ALL_EPOCHS,
    MINUTES_PER_DAY,
    DailyFeatureMatrix,
    Epoch,
    Stream,
    cap_outliers_matrix,
    date_of,
    drop_all_missing,
    one_hot,
)
from . import lowlevel as ll
from .bouts import BoutTable
from .highlevel import STUDY_MIN_DWELL, class_features, party_mask, qualifying_bout_mask
from .location import (
    EPS_M,
    MIN_PTS,
    STATIC_KMH,
    circadian_movement,
    cluster_locations,
    dwell_features,
    haversine_m,
    infer_home,
    local_xy,
    speeds_kmh,
    step_distances,
)
from .places import OUTSIDE, PLACE_LABELS, PlaceMap

log = logging.getLogger(__name__)

HOME_RADIUS_M = 10.0
NEAR_HOME_RADIUS_M = 100.0
MAP_LABELS = PLACE_LABELS + (OUTSIDE,)
SLEEP_WINDOW_START = -12 * 60  # noon of the previous day

ONE_HOT_PREFIX = "act_most_common_"


@dataclass
class ExtractConfig:
    eps_m: float = EPS_M
    min_pts: int = MIN_PTS
    static_kmh: float = STATIC_KMH
    minutes_per_sample: float = 1.0
    cap_outliers: bool = True
    n_jobs: int = 1
    epochs: tuple = field(default_factory=lambda: ALL_EPOCHS)


def _stream(streams, sensor):
    s = streams.get(sensor)
    return Stream.empty(sensor) if s is None else s


def _present(t, lo, hi):
    a, b = np.searchsorted(t, [lo, hi])
    return b > a


class _LocationContext:
    """Per-participant location preprocessing shared by all windows."""

    def __init__(self, s: Stream, place_map: PlaceMap, cfg: ExtractConfig):
        self.t = s.t
        self.lat = np.asarray(s["lat"], dtype=float) if len(s) else np.empty(0)
        self.lon = np.asarray(s["lon"], dtype=float) if len(s) else np.empty(0)
        self.mps = cfg.minutes_per_sample
        n = len(self.t)
        self.step = step_distances(self.lat, self.lon)
        self.speed = speeds_kmh(self.t, self.lat, self.lon)
        self.static = self.speed < cfg.static_kmh
        self.x, self.y = local_xy(self.lat, self.lon) if n else (np.empty(0), np.empty(0))
        self.labels, self.building = place_map.lookup(self.lat, self.lon)
        # day-level cluster ranks: >= 1 clustered, 0 static noise, -1 moving
        self.rank = np.full(n, -1, dtype=np.int64)
        days = self.t // MINUTES_PER_DAY
        for d in np.unique(days):
            idx = np.flatnonzero((days == d) & self.static)
            if idx.size == 0:
                continue
            _, lab = cluster_locations(self.lat[idx], self.lon[idx], cfg.eps_m, cfg.min_pts, self.mps)
            self.rank[idx] = lab
        self.home = infer_home(self.t, self.lat, self.lon, cfg.eps_m, cfg.min_pts) if n else None
        if self.home is not None:
            self.home_dist = haversine_m(self.home.lat, self.home.lon, self.lat, self.lon)
            hl, _ = place_map.lookup(np.array([self.home.lat]), np.array([self.home.lon]))
            self.frat_resident = hl[0] == "frat"
        else:
            self.home_dist = None
            self.frat_resident = False
        self.study = qualifying_bout_mask(self.t, self.labels, "study", STUDY_MIN_DWELL)
        self.party = party_mask(self.t, self.labels, self.frat_resident)
        self.circadian = circadian_movement(self.t, self.lat, self.lon) if n else np.nan

    def window(self, lo, hi):
        return np.searchsorted(self.t, [lo, hi])

    def location_features(self, a, b):
        m = self.mps
        n = b - a
        out = {"loc_total_distance": float(self.step[a + 1:b].sum()) if n > 1 else 0.0}
        if n == 0:
            for k in ("radius_gyration", "variance", "avg_speed", "pct_moving", "pct_outlier",
                      "home_time", "home_pct", "near_home_time", "near_home_pct"):
                out[f"loc_{k}"] = np.nan
            for r in (1, 2, 3):
                out[f"loc_time_cluster{r}"] = np.nan
            out.update(dwell_features(np.empty(0)))
            return out
        x, y = self.x[a:b], self.y[a:b]
        out["loc_radius_gyration"] = float(np.sqrt(np.mean((x - x.mean()) ** 2 + (y - y.mean()) ** 2)))
        out["loc_variance"] = float(np.log1p(x.var() + y.var()))
        out["loc_avg_speed"] = float(self.speed[a:b].mean())
        out["loc_pct_moving"] = float(np.mean(~self.static[a:b]))
        rk = self.rank[a:b]
        n_static = np.sum(rk >= 0)
        out["loc_pct_outlier"] = float(np.sum(rk == 0) / n_static) if n_static else np.nan
        for r in (1, 2, 3):
            out[f"loc_time_cluster{r}"] = float(np.sum(rk == r) * m)
        cl = rk[rk > 0]
        dwell = np.bincount(cl)[1:] * m if cl.size else np.empty(0)
        out.update(dwell_features(dwell[dwell > 0]))
        if self.home_dist is None:
            out.update({"loc_home_time": np.nan, "loc_home_pct": np.nan,
                        "loc_near_home_time": np.nan, "loc_near_home_pct": np.nan})
        else:
            hd = self.home_dist[a:b]
            out["loc_home_time"] = float(np.sum(hd <= HOME_RADIUS_M) * m)
            out["loc_home_pct"] = float(np.mean(hd <= HOME_RADIUS_M))
            out["loc_near_home_time"] = float(np.sum(hd <= NEAR_HOME_RADIUS_M) * m)
            out["loc_near_home_pct"] = float(np.mean(hd <= NEAR_HOME_RADIUS_M))
        return out

    def map_features(self, a, b):
        lab = self.labels[a:b]
        t = self.t[a:b]
        out = {}
        for name in MAP_LABELS:
            codes = (lab == name).astype(np.int64)
            bt = BoutTable(t, codes, max_gap=5)
            idx = bt.of(1)
            d = bt.duration[idx].astype(float)
            out[f"map_{name}_time"] = float(codes.sum() * self.mps)
            out[f"map_{name}_bouts"] = float(idx.size)
            out[f"map_{name}_bouts10"] = float(np.sum(d >= 10))
            out[f"map_{name}_bouts30"] = float(np.sum(d >= 30))
            out[f"map_{name}_max_bout"] = float(d.max()) if d.size else 0.0
        return out

    def high_level_features(self, a, b, moving_at):
        """``moving_at`` is the per-sample non-stationary flag, or None without activity data."""
        m = self.mps
        lab = self.labels[a:b]
        study = self.study[a:b]
        out = {
            "hl_study_duration": float(study.sum() * m),
            "hl_dorm_duration": float(np.sum(lab == "living") * m),
            "hl_party_duration": float(self.party[a:b].sum() * m),
        }
        if moving_at is None:
            out.update({"hl_study_focus": np.nan, "hl_indoor_mobility": np.nan, "hl_outdoor_mobility": np.nan})
            return out
        mv = moving_at[a:b]
        out["hl_study_focus"] = float(np.mean(~mv[study])) if study.any() else np.nan
        indoor = lab != OUTSIDE
        out["hl_indoor_mobility"] = float(np.sum(mv & indoor) * m)
        out["hl_outdoor_mobility"] = float(np.sum(mv & ~indoor) * m)
        return out


def _activity_state(act_t, act_type, when):
    """Activity type in force at each time in ``when`` (None before the first event)."""
    pos = np.searchsorted(act_t, when, side="right") - 1
    out = np.full(len(when), None, dtype=object)
    ok = pos >= 0
    out[ok] = act_type[pos[ok]]
    return out


def participant_features(streams: dict, place_map: PlaceMap, schedule, days, cfg: ExtractConfig | None = None):
    """Feature values of one participant.

    ``streams`` maps sensor name to :class:`Stream`; ``days`` are day numbers;
    ``schedule`` is a list of :class:`ClassBlock` (empty masks attendance).
    Returns ``(values, most_common)``: ``values`` maps feature name to a
    per-day array, ``most_common`` maps epoch label to a per-day list of the
    most common activity (None when missing).
    """
    cfg = cfg or ExtractConfig()
    days = [int(d) for d in days]
    act = _stream(streams, "Activity")
    bat = _stream(streams, "Battery")
    bt = _stream(streams, "Bluetooth")
    call = _stream(streams, "Call")
    scr = _stream(streams, "Screen")
    wifi = _stream(streams, "Wifi")
    slp = _stream(streams, "SleepMinute")
    stp = _stream(streams, "StepMinute")
    loc = _LocationContext(_stream(streams, "Location"), place_map, cfg)

    act_type = act["type"] if len(act) else np.empty(0, dtype=object)
    moving_loc = None
    if len(act):
        state = _activity_state(act.t, act_type, loc.t)
        moving_loc = np.isin(state, ll.NON_STATIONARY)
    bat_sessions = ll.charge_sessions(bat.t, bat["status"]) if len(bat) else (np.empty(0, np.int64),) * 2
    bt_groups = ll.split_bluetooth_devices(list(bt["address"])) if len(bt) else {}
    scr_sessions = ll.screen_sessions(scr.t, scr["event"]) if len(scr) else None

    rows = []
    most_common = {e.label: [] for e in cfg.epochs}
    for d in days:
        day_lo, day_hi = d * MINUTES_PER_DAY, (d + 1) * MINUTES_PER_DAY
        has = {name: _present(s.t, day_lo, day_hi) for name, s in
               (("Activity", act), ("Battery", bat), ("Bluetooth", bt), ("Call", call), ("Location", loc),
                ("Screen", scr), ("Wifi", wifi), ("StepMinute", stp))}
        has["SleepMinute"] = _present(slp.t, day_lo + SLEEP_WINDOW_START, day_lo + 720)
        row = {}
        for ep in cfg.epochs:
            lo, hi = ep.window(d)
            feats = {}
            if has["Activity"]:
                f, mc = ll.activity_features(act.t, act_type, lo, hi)
                grid = _activity_state(act.t, act_type, np.arange(lo, hi))
                f["hl_activity_duration"] = float(np.isin(grid, ll.NON_STATIONARY).sum())
                feats.update(f)
            else:
                mc = None
            most_common[ep.label].append(mc)
            if has["Battery"]:
                feats.update(ll.battery_features(*bat_sessions, lo, hi))
            if has["Bluetooth"]:
                feats.update(ll.bluetooth_features(bt.t, bt["address"], bt_groups, lo, hi))
            if has["Call"]:
                feats.update(ll.call_features(call.t, call["type"], call["duration"], lo, hi))
            if has["Screen"]:
                feats.update(ll.screen_features(scr.t, scr["event"], lo, hi, scr_sessions))
            if has["Wifi"]:
                feats.update(ll.wifi_features(wifi.t, wifi["bssid"], lo, hi))
            if has["StepMinute"]:
                feats.update(ll.step_features(stp.t, stp["steps"], lo, hi))
            if has["Location"]:
                a, b = loc.window(lo, hi)
                feats.update(loc.location_features(a, b))
                feats.update(loc.map_features(a, b))
                feats.update(loc.high_level_features(a, b, moving_loc))
                if schedule:
                    feats.update(class_features(loc.t, loc.building, schedule, d, ep.start, ep.end))
            if ep is Epoch.FULLDAY:
                if has["SleepMinute"]:
                    feats.update(ll.sleep_features(slp.t, slp["status"], day_lo + SLEEP_WINDOW_START, day_lo + 720))
                if has["Location"]:
                    feats["loc_circadian"] = loc.circadian
            for k, v in feats.items():
                row[f"{k}__{ep.label}"] = v
        rows.append(row)
    names = sorted(set().union(*rows)) if rows else []
    values = {n: np.array([r.get(n, np.nan) for r in rows], dtype=float) for n in names}
    return values, most_common


def extract_cohort(streams_by_pid: dict, place_map: PlaceMap, schedules: dict, days, cfg: ExtractConfig | None = None):
    """Cohort daily matrix: participants sorted, days in order, features sorted by name.

    Most-common activity is one-hot encoded over the categories observed in
    the cohort; IQR capping (per participant and feature) then skips the
    indicators; features missing everywhere are dropped.
    """
    cfg = cfg or ExtractConfig()
    pids = sorted(streams_by_pid)
    if cfg.n_jobs == 1:
        results = [participant_features(streams_by_pid[p], place_map, schedules.get(p, []), days, cfg) for p in pids]
    else:
        results = Parallel(n_jobs=cfg.n_jobs)(
            delayed(participant_features)(streams_by_pid[p], place_map, schedules.get(p, []), days, cfg)
            for p in pids)
    names = sorted(set().union(*(r[0] for r in results))) if results else []
    vals = np.full((len(pids), len(days), len(names)), np.nan)
    col = {n: i for i, n in enumerate(names)}
    for i, (v, _) in enumerate(results):
        for n, arr in v.items():
            vals[i, :, col[n]] = arr
    extra_names, extra = [], []
    for ep in cfg.epochs:
        cells = [mc for _, by_epoch in results for mc in by_epoch[ep.label]]
        enc = one_hot(cells)
        for cat, ind in enc.items():
            extra_names.append(f"{ONE_HOT_PREFIX}{cat}__{ep.label}")
            extra.append(ind.reshape(len(pids), len(days)))
    if extra:
        vals = np.concatenate([vals, np.stack(extra, axis=2)], axis=2)
        names = names + extra_names
    order = np.argsort(names, kind="stable")
    names = [names[i] for i in order]
    vals = vals[:, :, order]
    m = DailyFeatureMatrix.from_values(pids, [date_of(d) for d in days], names, vals)
    if cfg.cap_outliers:
        m = cap_outliers_matrix(m, skip=[n for n in names if n.startswith(ONE_HOT_PREFIX)])
    return drop_all_missing(m)
