"""Time the numba kernels against the numpy fallback on representative inputs.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Each kernel is called once per backend before timing so numba compilation
is excluded. Reports the best of ``--repeat`` runs and checks that both
backends agree.
"""
from __future__ import annotations

import argparse
import json
import time

import numpy as np

from earlyrisk import _kernels as K


def _inputs(rng):
    n_min = 7 * 1440
    t = np.cumsum(rng.integers(1, 3, n_min))
    codes = (rng.random(n_min) < 0.3).astype(np.int64)
    pts = np.concatenate([c + rng.normal(0, 1e-4, (600, 2)) for c in ([47.65, -122.30], [47.66, -122.31])])
    x = rng.normal(size=(64, 7, 120))
    w = rng.normal(size=(8, 120, 3))
    b = rng.normal(size=8)
    g = rng.normal(size=(64, 5, 8))
    corr = np.abs(np.corrcoef(rng.normal(size=(600, 180))))
    xl = rng.normal(size=(200, 40))
    yl = (xl[:, 0] > 0).astype(float)
    return {
        "runs (1 week of minutes)": (K.runs, (t, codes, 1)),
        "dbscan (1200 GPS fixes)": (K.dbscan, (pts[:, 0], pts[:, 1], 30.0, 5)),
        "conv1d forward": (K.conv1d_forward, (x, w, b)),
        "conv1d backward": (K.conv1d_backward, (x, g, 3)),
        "greedy prune (600 features)": (K.greedy_prune, (corr, 0.7)),
        "logistic GD (200 x 40)": (K.lr_gd, (xl, yl, np.zeros(40), 0.0, 1e-3, 0.5, 1e-12, 2000)),
    }


def _best(fn, args, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def _close(a, b):
    if isinstance(a, tuple):
        return all(_close(x, y) for x, y in zip(a, b))
    return np.allclose(np.asarray(a, float), np.asarray(b, float), rtol=1e-8, atol=1e-10)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", help="also write the results here")
    args = ap.parse_args(argv)
    if not K.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    rows = []
    for name, (fn, fargs) in _inputs(np.random.default_rng(args.seed)).items():
        timings, outs = {}, {}
        for backend in ("numpy", "numba"):
            with K.use_backend(backend):
                fn(*fargs)  # warm-up / compile
                timings[backend], outs[backend] = _best(fn, fargs, args.repeat)
        rows.append({"kernel": name, "numpy_ms": 1e3 * timings["numpy"], "numba_ms": 1e3 * timings["numba"],
                     "speedup": timings["numpy"] / timings["numba"], "agree": _close(outs["numpy"], outs["numba"])})
    width = max(len(r["kernel"]) for r in rows)
    print(f"{'kernel':<{width}}  {'numpy ms':>10}  {'numba ms':>10}  {'speedup':>8}  agree")
    for r in rows:
        print(f"{r['kernel']:<{width}}  {r['numpy_ms']:>10.3f}  {r['numba_ms']:>10.3f}  {r['speedup']:>7.1f}x  {r['agree']}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=1)
    return 0 if all(r["agree"] for r in rows) else 1


if __name__ == "__main__":
    raise SystemExit(main())
