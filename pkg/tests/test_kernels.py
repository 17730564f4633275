import os
import subprocess
import sys

import numpy as np
import pytest

from earlyrisk import _kernels as K


def both(fn, *args):
    with K.use_backend("numpy"):
        a = fn(*args)
    with K.use_backend("numba"):
        b = fn(*args)
    return a, b


def _assert_same(a, b, rtol=1e-10):
    if isinstance(a, tuple):
        for x, y in zip(a, b):
            _assert_same(x, y, rtol)
    else:
        np.testing.assert_allclose(np.asarray(a, float), np.asarray(b, float), rtol=rtol, atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_runs_parity(seed):
    rng = np.random.default_rng(seed)
    t = np.cumsum(rng.integers(1, 4, 300))
    codes = rng.integers(0, 3, 300)
    a, b = both(K.runs, t, codes, 2)
    _assert_same(a, b)
    starts, lengths = a
    assert lengths.sum() == 300 and starts[0] == 0


def test_runs_empty():
    for backend in ("numpy", "numba"):
        with K.use_backend(backend):
            s, n = K.runs(np.empty(0), np.empty(0))
            assert s.size == 0 and n.size == 0


@pytest.mark.parametrize("seed", range(3))
def test_dbscan_parity(seed):
    rng = np.random.default_rng(seed)
    centers = np.array([[47.65, -122.30], [47.66, -122.31]])
    pts = np.concatenate([c + rng.normal(0, 5e-5, (60, 2)) for c in centers] + [rng.uniform(47.6, 47.7, (10, 2))])
    a, b = both(K.dbscan, pts[:, 0], pts[:, 1], 30.0, 5)
    np.testing.assert_array_equal(a, b)
    assert len(set(a[:60])) == 1 and a[0] != a[60]


def test_conv_parity(rng):
    x = rng.normal(size=(4, 9, 3))
    w = rng.normal(size=(2, 3, 3))
    bias = rng.normal(size=2)
    a, b = both(K.conv1d_forward, x, w, bias)
    _assert_same(a, b)
    assert a.shape == (4, 7, 2)
    # a direct loop for one output cell
    assert a[1, 2, 0] == pytest.approx(np.sum(x[1, 2:5, :] * w[0].T) + bias[0])
    g = rng.normal(size=a.shape)
    _assert_same(*both(K.conv1d_backward, x, g, 3))


def test_greedy_prune_parity(rng):
    c = np.abs(np.corrcoef(rng.normal(size=(8, 30))))
    a, b = both(K.greedy_prune, c, 0.2)
    np.testing.assert_array_equal(a, b)
    assert a[0]


def test_lr_gd_parity(rng):
    x = rng.normal(size=(50, 4))
    y = (x[:, 0] > 0).astype(float)
    a, b = both(K.lr_gd, x, y, np.zeros(4), 0.0, 0.1, 0.5, 1e-8, 500)
    _assert_same(a, b, rtol=1e-8)


def test_env_flag_selects_numpy():
    code = "from earlyrisk import _kernels; print(_kernels.BACKEND)"
    env = {**os.environ, "ERL_KERNELS": "numpy"}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
    env["ERL_KERNELS"] = "fortran"
    bad = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert bad.returncode != 0


def test_use_backend_rejects_unknown():
    with pytest.raises(ValueError):
        with K.use_backend("cuda"):
            pass
