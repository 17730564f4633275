"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The backend is picked once at import from ``ERL_KERNELS`` (``numba`` or
``numpy``; default ``numba`` when importable) and can be switched at runtime
with :func:`use_backend`. Both paths implement the same algorithm; results
agree to floating-point roundoff, not bit-for-bit.
"""
from __future__ import annotations

import contextlib
import math
import os

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

EARTH_RADIUS_M = 6371008.8

_requested = os.environ.get("ERL_KERNELS", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ValueError(f"ERL_KERNELS must be 'numba' or 'numpy', got {_requested!r}")
BACKEND = "numba" if (_requested == "numba" and HAVE_NUMBA) else "numpy"


def use_backend(name: str):
    """Context manager that temporarily switches the kernel backend."""

    @contextlib.contextmanager
    def _cm():
        global BACKEND
        if name not in ("numba", "numpy"):
            raise ValueError(name)
        if name == "numba" and not HAVE_NUMBA:
            raise RuntimeError("numba is not installed")
        old = BACKEND
        BACKEND = name
        try:
            yield
        finally:
            BACKEND = old

    return _cm()


# ---------------------------------------------------------------------------
# run-length grouping of minute-sampled state sequences


def _np_runs(t, codes, max_gap):
    n = t.shape[0]
    if n == 0:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    brk = np.ones(n, dtype=bool)
    brk[1:] = (codes[1:] != codes[:-1]) | ((t[1:] - t[:-1]) > max_gap)
    starts = np.flatnonzero(brk).astype(np.int64)
    ends = np.empty_like(starts)
    ends[:-1] = starts[1:]
    ends[-1] = n
    return starts, ends - starts


def _np_dbscan(lat_rad, lon_rad, eps_m, min_pts):
    n = lat_rad.shape[0]
    labels = np.full(n, -1, dtype=np.int64)
    if n == 0:
        return labels
    eps = eps_m / EARTH_RADIUS_M
    h_eps = np.sin(eps / 2) ** 2
    neighbors = []
    chunk = 512
    cos_lat = np.cos(lat_rad)
    for s in range(0, n, chunk):
        e = min(n, s + chunk)
        dphi = lat_rad[s:e, None] - lat_rad[None, :]
        dlmb = lon_rad[s:e, None] - lon_rad[None, :]
        h = np.sin(dphi / 2) ** 2 + cos_lat[s:e, None] * cos_lat[None, :] * np.sin(dlmb / 2) ** 2
        for row in h <= h_eps:
            neighbors.append(np.flatnonzero(row))
    core = np.array([len(nb) >= min_pts for nb in neighbors])
    cluster = 0
    for i in range(n):
        if labels[i] != -1 or not core[i]:
            continue
        stack = [i]
        while stack:
            j = stack.pop()
            if labels[j] == -1:
                labels[j] = cluster
                if core[j]:
                    for q in neighbors[j]:
                        if labels[q] == -1:
                            stack.append(q)
        cluster += 1
    return labels


def _np_conv1d_forward(x, w, b):
    k = w.shape[2]
    win = sliding_window_view(x, k, axis=1)  # [B, L, F, K]
    return np.einsum("blfk,cfk->blc", win, w, optimize=True) + b


def _np_conv1d_backward(x, gout, k):
    win = sliding_window_view(x, k, axis=1)
    dw = np.einsum("blfk,blc->cfk", win, gout, optimize=True)
    return dw, gout.sum(axis=(0, 1))


def _np_greedy_prune(abs_corr, cutoff):
    p = abs_corr.shape[0]
    keep = np.zeros(p, dtype=bool)
    kept = []
    for j in range(p):
        if kept and np.any(abs_corr[j, kept] > cutoff):
            continue
        keep[j] = True
        kept.append(j)
    return keep


def _np_lr_gd(x, y, w, b, lam, step, tol, max_iter):
    n = x.shape[0]
    it = 0
    for it in range(1, max_iter + 1):
        z = x @ w + b
        p = 0.5 * (1.0 + np.tanh(0.5 * z))
        r = p - y
        gw = x.T @ r / n + lam * w
        gb = r.sum() / n
        if math.sqrt(float(gw @ gw) + gb * gb) < tol:
            break
        w = w - step * gw
        b = b - step * gb
    return w, b, it


# ---------------------------------------------------------------------------
# numba twins

if HAVE_NUMBA:

    @njit(cache=True)
    def _nb_runs(t, codes, max_gap):
        n = t.shape[0]
        starts = np.empty(n, np.int64)
        lens = np.empty(n, np.int64)
        m = 0
        for i in range(n):
            if i == 0 or codes[i] != codes[i - 1] or t[i] - t[i - 1] > max_gap:
                starts[m] = i
                lens[m] = 1
                m += 1
            else:
                lens[m - 1] += 1
        return starts[:m].copy(), lens[:m].copy()

    @njit(cache=True, inline="always")
    def _nb_within(la, loa, ca, lb, lob, cb, eps, h_eps):
        # Small-angle screen decides all but near-boundary pairs; those get
        # the exact haversine test so results match the numpy path.
        dphi = la - lb
        dl = loa - lob
        if abs(dl) < 1e-3:
            q = dphi * dphi + ca * cb * dl * dl
            e2 = eps * eps
            if q < e2 * (1.0 - 1e-6):
                return True
            if q > e2 * (1.0 + 1e-6):
                return False
        sp = math.sin(dphi / 2)
        sl = math.sin(dl / 2)
        return sp * sp + ca * cb * sl * sl <= h_eps

    @njit(cache=True)
    def _nb_neighbors(lat_rad, lon_rad, eps):
        # Window over latitude-sorted points; compare haversine h against
        # sin^2(eps/2) rather than taking arcsin. Two passes: count, then fill.
        n = lat_rad.shape[0]
        order = np.argsort(lat_rad, kind="mergesort")
        slat = lat_rad[order]
        slon = lon_rad[order]
        scos = np.cos(slat)
        h_eps = math.sin(eps / 2) ** 2
        counts = np.zeros(n, np.int64)
        lo = 0
        for a in range(n):
            while slat[a] - slat[lo] > eps:
                lo += 1
            hi = lo
            c = 0
            while hi < n and slat[hi] - slat[a] <= eps:
                if _nb_within(slat[a], slon[a], scos[a], slat[hi], slon[hi], scos[hi], eps, h_eps):
                    c += 1
                hi += 1
            counts[order[a]] = c
        ptr = np.zeros(n + 1, np.int64)
        for i in range(n):
            ptr[i + 1] = ptr[i] + counts[i]
        out = np.empty(ptr[n], np.int64)
        lo = 0
        for a in range(n):
            while slat[a] - slat[lo] > eps:
                lo += 1
            i = order[a]
            k = ptr[i]
            hi = lo
            while hi < n and slat[hi] - slat[a] <= eps:
                if _nb_within(slat[a], slon[a], scos[a], slat[hi], slon[hi], scos[hi], eps, h_eps):
                    out[k] = order[hi]
                    k += 1
                hi += 1
        # neighbour order within a list does not change the labels: border
        # points go to whichever cluster the outer index loop expands first
        return ptr, out

    @njit(cache=True)
    def _nb_dbscan(lat_rad, lon_rad, eps_m, min_pts):
        n = lat_rad.shape[0]
        labels = np.full(n, -1, np.int64)
        if n == 0:
            return labels
        ptr, nb = _nb_neighbors(lat_rad, lon_rad, eps_m / EARTH_RADIUS_M)
        # label on push, so each point enters the stack at most once
        stack = np.empty(n, np.int64)
        cluster = 0
        for i in range(n):
            if labels[i] != -1 or ptr[i + 1] - ptr[i] < min_pts:
                continue
            labels[i] = cluster
            top = 0
            stack[top] = i
            top += 1
            while top > 0:
                top -= 1
                j = stack[top]
                if ptr[j + 1] - ptr[j] < min_pts:
                    continue
                for q in range(ptr[j], ptr[j + 1]):
                    v = nb[q]
                    if labels[v] == -1:
                        labels[v] = cluster
                        stack[top] = v
                        top += 1
            cluster += 1
        return labels

    @njit(cache=True)
    def _nb_conv1d_forward(x, w, b):
        bsz, d, f = x.shape
        c_out, _, k = w.shape
        length = d - k + 1
        out = np.empty((bsz, length, c_out))
        for bi in range(bsz):
            for t in range(length):
                for c in range(c_out):
                    s = b[c]
                    for kk in range(k):
                        for ff in range(f):
                            s += w[c, ff, kk] * x[bi, t + kk, ff]
                    out[bi, t, c] = s
        return out

    @njit(cache=True)
    def _nb_conv1d_backward(x, gout, k):
        bsz, d, f = x.shape
        length = gout.shape[1]
        c_out = gout.shape[2]
        dw = np.zeros((c_out, f, k))
        db = np.zeros(c_out)
        for bi in range(bsz):
            for t in range(length):
                for c in range(c_out):
                    g = gout[bi, t, c]
                    db[c] += g
                    if g != 0.0:
                        for kk in range(k):
                            for ff in range(f):
                                dw[c, ff, kk] += g * x[bi, t + kk, ff]
        return dw, db

    @njit(cache=True)
    def _nb_greedy_prune(abs_corr, cutoff):
        p = abs_corr.shape[0]
        keep = np.zeros(p, np.bool_)
        kept = np.empty(p, np.int64)
        m = 0
        for j in range(p):
            ok = True
            for q in range(m):
                if abs_corr[j, kept[q]] > cutoff:
                    ok = False
                    break
            if ok:
                keep[j] = True
                kept[m] = j
                m += 1
        return keep

    @njit(cache=True)
    def _nb_lr_gd(x, y, w, b, lam, step, tol, max_iter):
        n, d = x.shape
        w = w.copy()
        xt = np.ascontiguousarray(x.T)
        it = 0
        for it in range(1, max_iter + 1):
            z = np.dot(x, w) + b
            r = np.empty(n)
            for i in range(n):
                r[i] = 0.5 * (1.0 + math.tanh(0.5 * z[i])) - y[i]
            gw = np.dot(xt, r) / n + lam * w
            gb = r.sum() / n
            if math.sqrt(np.dot(gw, gw) + gb * gb) < tol:
                break
            w -= step * gw
            b -= step * gb
        return w, b, it


# ---------------------------------------------------------------------------
# public dispatchers


def runs(t, codes, max_gap=1):
    """Maximal runs of equal ``codes`` with consecutive ``t`` at most ``max_gap`` apart.

    Returns ``(start_index, length)`` arrays.
    """
    t = np.ascontiguousarray(t, dtype=np.int64)
    codes = np.ascontiguousarray(codes, dtype=np.int64)
    if BACKEND == "numba":
        return _nb_runs(t, codes, np.int64(max_gap))
    return _np_runs(t, codes, max_gap)


def dbscan(lat_deg, lon_deg, eps_m=30.0, min_pts=5):
    """DBSCAN with haversine distance; returns labels, -1 for noise."""
    lat = np.radians(np.ascontiguousarray(lat_deg, dtype=np.float64))
    lon = np.radians(np.ascontiguousarray(lon_deg, dtype=np.float64))
    if BACKEND == "numba":
        return _nb_dbscan(lat, lon, float(eps_m), int(min_pts))
    return _np_dbscan(lat, lon, float(eps_m), int(min_pts))


def conv1d_forward(x, w, b):
    x = np.ascontiguousarray(x, dtype=np.float64)
    if BACKEND == "numba":
        return _nb_conv1d_forward(x, np.ascontiguousarray(w), np.ascontiguousarray(b))
    return _np_conv1d_forward(x, w, b)


def conv1d_backward(x, gout, k):
    """Weight and bias gradients of a valid 1-D convolution over the day axis."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if BACKEND == "numba":
        return _nb_conv1d_backward(x, np.ascontiguousarray(gout), int(k))
    return _np_conv1d_backward(x, gout, int(k))


def greedy_prune(abs_corr, cutoff):
    abs_corr = np.ascontiguousarray(abs_corr, dtype=np.float64)
    if BACKEND == "numba":
        return _nb_greedy_prune(abs_corr, float(cutoff))
    return _np_greedy_prune(abs_corr, float(cutoff))


def lr_gd(x, y, w, b, lam, step, tol, max_iter):
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    if BACKEND == "numba":
        return _nb_lr_gd(x, y, w, float(b), float(lam), float(step), float(tol), int(max_iter))
    return _np_lr_gd(x, y, w, float(b), float(lam), float(step), float(tol), int(max_iter))
