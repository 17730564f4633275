"""Per-sensor low-level behaviour features over one time window.

Every function takes the sensor arrays plus a half-open window ``[lo, hi)``
in absolute minutes and returns ``{feature: value}`` with NaN for undefined
statistics. Times reported as "first/last" are minutes after ``lo``.
"""
from __future__ import annotations

from collections import Counter

import numpy as np

from .bouts import BoutTable, nanstats, step_bouts

ACTIVITY_TYPES = ("in_vehicle", "on_bicycle", "on_foot", "running", "still", "tilting", "walking")
NON_STATIONARY = ("on_foot", "walking", "running", "on_bicycle")
STATIONARY = ("still", "tilting")
SLEEP_STATES = ("asleep", "restless", "awake")
SCREEN_EVENTS = ("on", "off", "unlock", "lock")
STEP_THRESHOLD = 12


def _win(t, lo, hi):
    return np.searchsorted(t, [lo, hi], side="left")


# ---------------------------------------------------------------------------
# activity


def activity_features(t, types, lo, hi):
    a, b = _win(t, lo, hi)
    w = list(types[a:b])
    if not w:
        return {"act_num_changes": 0.0, "act_num_unique": 0.0}, None
    changes = sum(1 for x, y in zip(w[:-1], w[1:]) if x != y)
    counts = Counter(w)
    top = max(counts.values())
    most_common = min(k for k, v in counts.items() if v == top)
    return {"act_num_changes": float(changes), "act_num_unique": float(len(counts))}, most_common


# ---------------------------------------------------------------------------
# battery


def charge_sessions(t, status):
    """(start, end) minutes of charging sessions from battery status events."""
    starts, ends = [], []
    cur = None
    for ti, s in zip(t, status):
        if s == "charging":
            if cur is None:
                cur = int(ti)
        elif cur is not None:
            starts.append(cur)
            ends.append(int(ti))
            cur = None
    if cur is not None:
        starts.append(cur)
        ends.append(int(t[-1]) if int(t[-1]) > cur else cur)
    return np.asarray(starts, dtype=np.int64), np.asarray(ends, dtype=np.int64)


def battery_features(starts, ends, lo, hi):
    n = np.sum((starts >= lo) & (starts < hi))
    overlap = np.clip(np.minimum(ends, hi) - np.maximum(starts, lo), 0, None)
    return {"bat_num_charges": float(n), "bat_charge_minutes": float(overlap.sum())}


# ---------------------------------------------------------------------------
# bluetooth


def split_bluetooth_devices(addresses, seed=0):
    """Label each device 'self' or 'others' by k-means on log scan frequency.

    k is 2 or 3, whichever has the higher silhouette; the cluster with the
    highest mean frequency is 'self'. With fewer than three distinct
    frequencies the most frequent device(s) are 'self'.
    """
    from sklearn.cluster import KMeans
    from sklearn.metrics import silhouette_score

    counts = Counter(addresses)
    if not counts:
        return {}
    devs = sorted(counts)
    freq = np.array([counts[d] for d in devs], dtype=float)
    v = np.log(freq).reshape(-1, 1)
    n_unique = len(np.unique(v))
    if n_unique < 3:
        top = freq.max()
        return {d: ("self" if f == top else "others") for d, f in zip(devs, freq)}
    best = None
    for k in (2, 3):
        if k >= n_unique:
            continue
        km = KMeans(n_clusters=k, n_init=10, random_state=seed).fit(v)
        score = silhouette_score(v, km.labels_)
        if best is None or score > best[0]:
            best = (score, km.labels_)
    labels = best[1]
    means = {c: v[labels == c].mean() for c in np.unique(labels)}
    self_c = max(means, key=means.get)
    return {d: ("self" if c == self_c else "others") for d, c in zip(devs, labels)}


def bluetooth_features(t, addresses, groups, lo, hi):
    a, b = _win(t, lo, hi)
    out = {"bt_num_scans": float(len(np.unique(t[a:b])))}
    addr = addresses[a:b]
    for g in ("self", "others"):
        c = Counter(x for x in addr if groups.get(x) == g)
        scans = np.array(list(c.values()), dtype=float)
        out[f"bt_{g}_num_devices"] = float(len(c))
        out[f"bt_{g}_num_detections"] = float(scans.sum()) if scans.size else 0.0
        out[f"bt_{g}_max_device_scans"] = float(scans.max()) if scans.size else np.nan
        out[f"bt_{g}_min_device_scans"] = float(scans.min()) if scans.size else np.nan
        out[f"bt_{g}_mean_device_scans"] = float(scans.mean()) if scans.size else np.nan
    return out


# ---------------------------------------------------------------------------
# calls


def call_features(t, kinds, duration_s, lo, hi):
    a, b = _win(t, lo, hi)
    k = kinds[a:b]
    d = duration_s[a:b]
    out = {}
    for kind in ("incoming", "outgoing", "missed"):
        out[f"call_num_{kind}"] = float(np.sum(k == kind))
    for kind in ("incoming", "outgoing"):
        out[f"call_dur_{kind}"] = float(d[k == kind].sum() / 60.0)
    return out


# ---------------------------------------------------------------------------
# screen


def screen_sessions(t, events):
    """Interaction sessions (on -> off|lock) and unlock sessions (unlock -> lock).

    Returns two ``(start, duration)`` array pairs in minutes.
    """
    inter, unl = [], []
    s_on = s_unl = None
    for ti, e in zip(t, events):
        ti = int(ti)
        if e == "on":
            if s_on is None:
                s_on = ti
        elif e in ("off", "lock"):
            if s_on is not None:
                inter.append((s_on, ti - s_on))
                s_on = None
            if e == "lock" and s_unl is not None:
                unl.append((s_unl, ti - s_unl))
                s_unl = None
        elif e == "unlock":
            if s_unl is None:
                s_unl = ti

    def _arr(x):
        x = np.asarray(x, dtype=np.int64).reshape(-1, 2)
        return x[:, 0], x[:, 1]

    return _arr(inter), _arr(unl)


def screen_features(t, events, lo, hi, sessions=None):
    if sessions is None:
        sessions = screen_sessions(t, events)
    out = {}
    for tag, (st, du) in zip(("int", "unl"), sessions):
        sel = (st >= lo) & (st < hi)
        out[f"scr_{tag}_count"] = float(sel.sum())
        out.update(nanstats(du[sel], f"scr_{tag}"))
    a, b = _win(t, lo, hi)
    tw, ew = t[a:b], events[a:b]
    for e in SCREEN_EVENTS:
        te = tw[ew == e]
        out[f"scr_first_{e}"] = float(te[0] - lo) if te.size else np.nan
        out[f"scr_last_{e}"] = float(te[-1] - lo) if te.size else np.nan
    out["scr_unlocks_per_min"] = float(np.sum(ew == "unlock")) / float(hi - lo)
    return out


# ---------------------------------------------------------------------------
# wifi


def wifi_features(t, bssid, lo, hi):
    a, b = _win(t, lo, hi)
    c = Counter(bssid[a:b])
    if not c:
        return {"wifi_num_aps": 0.0, "wifi_top_ap_share": np.nan}
    return {"wifi_num_aps": float(len(c)), "wifi_top_ap_share": max(c.values()) / float(sum(c.values()))}


# ---------------------------------------------------------------------------
# sleep


def sleep_features(t, status, lo, hi):
    a, b = _win(t, lo, hi)
    tw = t[a:b]
    sw = status[a:b]
    codes = np.array([SLEEP_STATES.index(s) for s in sw], dtype=np.int64)
    bt = BoutTable(tw, codes)
    out = {}
    for ci, s in enumerate(SLEEP_STATES):
        idx = bt.of(ci)
        d = bt.duration[idx].astype(float)
        out[f"slp_{s}_bouts"] = float(idx.size)
        out[f"slp_{s}_total"] = float(np.sum(codes == ci))
        out[f"slp_{s}_mean"] = float(d.mean()) if d.size else np.nan
        out[f"slp_{s}_max"] = float(d.max()) if d.size else np.nan
        out[f"slp_{s}_min"] = float(d.min()) if d.size else np.nan
    asleep = bt.of(0)
    out["slp_asleep_first_start"] = float(bt.start[asleep[0]] - lo) if asleep.size else np.nan
    out["slp_asleep_last_end"] = float(bt.end[asleep[-1]] - lo) if asleep.size else np.nan
    out["slp_in_bed"] = float(len(tw))
    out["slp_efficiency"] = out["slp_asleep_total"] / len(tw) if len(tw) else np.nan
    return out


# ---------------------------------------------------------------------------
# steps


def step_features(t, steps, lo, hi, threshold=STEP_THRESHOLD):
    a, b = _win(t, lo, hi)
    tw, sw = t[a:b], np.asarray(steps[a:b], dtype=float)
    bt = step_bouts(tw, sw, threshold)
    act, sed = bt.of(1), bt.of(0)
    ad = bt.duration[act].astype(float)
    asteps = bt.value[act]
    sd = bt.duration[sed].astype(float)
    out = {
        "stp_total": float(sw.sum()),
        "stp_active_bouts": float(act.size),
        "stp_sed_bouts": float(sed.size),
        "stp_active_mean_dur": float(ad.mean()) if ad.size else np.nan,
        "stp_active_max_dur": float(ad.max()) if ad.size else np.nan,
        "stp_active_mean_steps": float(asteps.mean()) if ad.size else np.nan,
        "stp_active_min_steps": float(asteps.min()) if ad.size else np.nan,
        "stp_active_max_steps": float(asteps.max()) if ad.size else np.nan,
        "stp_sed_mean_dur": float(sd.mean()) if sd.size else np.nan,
        "stp_sed_std_dur": float(sd.std(ddof=1)) if sd.size > 1 else np.nan,
    }
    if ad.size:
        longest = act[int(np.argmax(ad))]
        most = act[int(np.argmax(asteps))]
        out["stp_longest_active_start"] = float(bt.start[longest] - lo)
        out["stp_longest_active_end"] = float(bt.end[longest] - lo)
        out["stp_most_steps_start"] = float(bt.start[most] - lo)
    else:
        out["stp_longest_active_start"] = out["stp_longest_active_end"] = out["stp_most_steps_start"] = np.nan
    return out
