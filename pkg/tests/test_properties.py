import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from earlyrisk.acceptance import brute_force_breakpoint
from earlyrisk.domain import cap_outliers_iqr, iqr_caps
from earlyrisk.eval.fairness import demographic_parity_batch
from earlyrisk.features.change import behavioral_change
from earlyrisk.features.location import dwell_entropy
from earlyrisk.pipelines.cnn import ffill_bfill

small_ints = st.integers(min_value=-5, max_value=5)


@settings(max_examples=200, deadline=None)
@given(st.lists(small_ints, min_size=7, max_size=7))
def test_breakpoint_matches_brute_force(values):
    r = behavioral_change(values)
    day, before, after = brute_force_breakpoint(values)
    assert r.breakpoint_day == day
    if day is not None:
        assert abs(r.slope_before - before) < 1e-9 and abs(r.slope_after - after) < 1e-9


@given(st.lists(st.floats(0, 1e4), min_size=1, max_size=12))
def test_entropy_bounds(dwell):
    h, hn = dwell_entropy(dwell)
    if not np.isnan(h):
        assert h >= -1e-12 and 0.0 <= hn <= 1.0


@given(st.lists(st.floats(-1e3, 1e3), min_size=4, max_size=30))
def test_capping_stays_within_fences(values):
    lo, hi = iqr_caps(values)
    out = cap_outliers_iqr(values)
    assert np.all((out >= lo) & (out <= hi))
    inside = (np.asarray(values) >= lo) & (np.asarray(values) <= hi)
    np.testing.assert_array_equal(out[inside], np.asarray(values)[inside])


# Capping is idempotent when the order statistics around Q1 and Q3 cannot
# cross a fence, which holds for every length whose Q3 position has a
# fractional part of 0, 0.5 or 0.75 under linear interpolation.
@settings(max_examples=300, deadline=None)
@given(st.sampled_from([5, 6, 7, 9, 10, 11]).flatmap(
    lambda n: st.lists(st.one_of(st.floats(-1e3, 1e3), st.sampled_from([0.0, 1.0, 100.0])), min_size=n, max_size=n)))
def test_capping_idempotent(values):
    once = cap_outliers_iqr(values)
    np.testing.assert_allclose(cap_outliers_iqr(once), once, rtol=1e-12, atol=1e-9)


@pytest.mark.xfail(strict=True, reason="linear-interpolation Q3 of four values moves with the capped maximum")
def test_capping_idempotent_four_values():
    once = cap_outliers_iqr([1, 2, 3, 100])
    np.testing.assert_allclose(cap_outliers_iqr(once), once)


@given(st.lists(st.one_of(st.none(), st.floats(-10, 10)), min_size=1, max_size=10))
def test_ffill_bfill_keeps_observed_and_fills_all(values):
    x = np.array([np.nan if v is None else v for v in values])[:, None]
    out = ffill_bfill(x)[:, 0]
    obs = ~np.isnan(x[:, 0])
    np.testing.assert_array_equal(out[obs], x[obs, 0])
    assert np.isnan(out).all() if not obs.any() else not np.isnan(out).any()


@given(st.lists(st.tuples(st.booleans(), st.booleans()), min_size=2, max_size=12))
def test_parity_ratio_nonnegative(rows):
    pred = np.array([p for p, _ in rows])
    group = np.array([g for _, g in rows])
    diff, ratio, signed, defined = demographic_parity_batch(pred, group)
    if defined:
        assert 0 <= diff <= 1 and ratio >= 0 and abs(signed) == diff
    else:
        assert np.isnan(diff)
