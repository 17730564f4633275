"""Location clustering, dwell statistics and home inference."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lombscargle
from scipy.special import xlogy

from .. import _kernels
from ..domain import MINUTES_PER_DAY

EPS_M = 30.0
MIN_PTS = 5
STATIC_KMH = 1.0
NIGHT_MINUTES = 360


def haversine_m(lat1, lon1, lat2, lon2):
    p1, p2 = np.radians(lat1), np.radians(lat2)
    dphi = p2 - p1
    dl = np.radians(np.asarray(lon2) - np.asarray(lon1))
    h = np.sin(dphi / 2) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dl / 2) ** 2
    return 2 * _kernels.EARTH_RADIUS_M * np.arcsin(np.sqrt(np.minimum(h, 1.0)))


def step_distances(lat, lon):
    """Distance in metres from each sample to the previous one (0 for the first)."""
    d = np.zeros(len(lat))
    if len(lat) > 1:
        d[1:] = haversine_m(lat[:-1], lon[:-1], lat[1:], lon[1:])
    return d


def speeds_kmh(t, lat, lon):
    """Speed into each sample from its predecessor; the first sample copies the second."""
    t = np.asarray(t, dtype=np.int64)
    v = np.zeros(len(t))
    if len(t) > 1:
        dt_h = np.maximum(np.diff(t), 1) / 60.0
        v[1:] = step_distances(lat, lon)[1:] / 1000.0 / dt_h
        v[0] = v[1]
    return v


def local_xy(lat, lon, lat0=None, lon0=None):
    """Equirectangular projection to metres around a reference point."""
    lat = np.asarray(lat, dtype=float)
    lon = np.asarray(lon, dtype=float)
    lat0 = np.mean(lat) if lat0 is None else lat0
    lon0 = np.mean(lon) if lon0 is None else lon0
    k = np.pi / 180 * _kernels.EARTH_RADIUS_M
    return (lon - lon0) * k * np.cos(np.radians(lat0)), (lat - lat0) * k


@dataclass(frozen=True)
class LocationCluster:
    id: int
    members: np.ndarray  # indices into the clustered samples
    centroid: tuple
    rank: int  # 1 = most dwell time
    dwell: float  # minutes

    @property
    def size(self):
        return len(self.members)


def cluster_locations(lat, lon, eps_m=EPS_M, min_pts=MIN_PTS, minutes_per_sample=1.0):
    """Density clusters of static samples, ranked by dwell time.

    Returns ``(clusters, labels)`` where ``labels[i]`` is the cluster rank of
    sample ``i`` (1-based) or 0 for noise.
    """
    lat = np.asarray(lat, dtype=float)
    lon = np.asarray(lon, dtype=float)
    raw = _kernels.dbscan(lat, lon, eps_m, min_pts)
    ids = np.unique(raw[raw >= 0])
    sizes = np.array([np.sum(raw == c) for c in ids], dtype=np.int64)
    # rank by size desc, then by order of discovery
    order = np.lexsort((ids, -sizes))
    clusters = []
    labels = np.zeros(len(lat), dtype=np.int64)
    for rank, j in enumerate(order, start=1):
        members = np.flatnonzero(raw == ids[j])
        labels[members] = rank
        clusters.append(LocationCluster(int(ids[j]), members,
                                        (float(lat[members].mean()), float(lon[members].mean())),
                                        rank, float(len(members) * minutes_per_sample)))
    return clusters, labels


def dwell_entropy(dwell) -> tuple[float, float]:
    """Shannon entropy (nats) of the dwell distribution and its normalised form.

    Normalised entropy divides by ln(#clusters) and is 0 for fewer than two
    clusters.
    """
    d = np.asarray(dwell, dtype=float)
    d = d[d > 0]
    if d.size == 0:
        return np.nan, np.nan
    p = d / d.sum()
    h = float(-xlogy(p, p).sum())  # p underflowing to 0 contributes 0
    if d.size < 2:
        return h, 0.0
    return h, min(1.0, max(0.0, h / np.log(d.size)))


def dwell_features(dwell, prefix="loc_dwell"):
    d = np.asarray(dwell, dtype=float)
    h, hn = dwell_entropy(d)
    out = {f"{prefix}_num_clusters": float(np.sum(d > 0))}
    if d.size:
        out.update({f"{prefix}_sum": float(d.sum()), f"{prefix}_mean": float(d.mean()),
                    f"{prefix}_std": float(d.std(ddof=1)) if d.size > 1 else np.nan,
                    f"{prefix}_max": float(d.max()), f"{prefix}_min": float(d.min())})
    else:
        out.update({f"{prefix}_sum": 0.0, f"{prefix}_mean": np.nan, f"{prefix}_std": np.nan,
                    f"{prefix}_max": np.nan, f"{prefix}_min": np.nan})
    out[f"{prefix}_entropy"] = h
    out[f"{prefix}_norm_entropy"] = hn
    return out


@dataclass(frozen=True)
class Home:
    lat: float
    lon: float
    nights: tuple  # day numbers of the qualifying run


def infer_home(t, lat, lon, eps_m=EPS_M, min_pts=MIN_PTS, min_nights=4, min_fraction=0.8,
               min_observed=30):
    """Home = night cluster holding >= ``min_fraction`` of each of >= ``min_nights``
    consecutive nights.

    Night of day D is [D 00:00, D 06:00). The dwell share of a night is taken
    over its observed samples; nights with fewer than ``min_observed`` samples
    break a run. Ties between qualifying clusters go to the longer run, then
    to the larger cluster.
    """
    t = np.asarray(t, dtype=np.int64)
    night = (t % MINUTES_PER_DAY) < NIGHT_MINUTES
    if night.sum() < min_pts:
        return None
    tn, la, lo = t[night], np.asarray(lat)[night], np.asarray(lon)[night]
    clusters, labels = cluster_locations(la, lo, eps_m, min_pts)
    if not clusters:
        return None
    day = tn // MINUTES_PER_DAY
    days = np.arange(day.min(), day.max() + 1)
    observed = np.array([np.sum(day == d) for d in days])
    best = None
    for c in clusters:
        share = np.array([np.sum((day == d) & (labels == c.rank)) for d in days]) / np.maximum(observed, 1)
        ok = (share >= min_fraction) & (observed >= min_observed)
        run, best_run = [], []
        for d, flag in zip(days, ok):
            run = run + [int(d)] if flag else []
            if len(run) > len(best_run):
                best_run = run
        if len(best_run) >= min_nights:
            key = (len(best_run), c.size)
            if best is None or key > best[0]:
                best = (key, Home(c.centroid[0], c.centroid[1], tuple(best_run)))
    return None if best is None else best[1]


def circadian_movement(t, lat, lon, min_samples=60, band_hours=(23.5, 24.5), n_freq=11):
    """log of the Lomb-Scargle energy of x/y position in a band around 24 h.

    Returns NaN when there are too few samples or no movement at all.
    """
    t = np.asarray(t, dtype=np.int64)
    if len(t) < min_samples or (t.max() - t.min()) < MINUTES_PER_DAY:
        return np.nan
    x, y = local_xy(lat, lon)
    hours = (t - t.min()) / 60.0
    freqs = 2 * np.pi / np.linspace(band_hours[0], band_hours[1], n_freq)
    energy = 0.0
    for comp in (x, y):
        c = comp - comp.mean()
        if np.allclose(c, 0):
            continue
        energy += float(lombscargle(hours, c, freqs).sum())
    if energy <= 0:
        return np.nan
    return float(np.log(energy))
