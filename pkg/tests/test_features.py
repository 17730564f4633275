import datetime as dt
import math

import numpy as np
import pytest

from earlyrisk.domain import DailyFeatureMatrix
from earlyrisk.features.bouts import step_bouts
from earlyrisk.features.change import behavioral_change, weekly_aggregate, weekly_features
from earlyrisk.features.highlevel import ClassBlock, class_attendance, party_mask
from earlyrisk.features.location import dwell_entropy, haversine_m, infer_home
from earlyrisk.features.lowlevel import screen_features, screen_sessions, step_features
from earlyrisk.fixtures import check, load_golden

GOLDEN = load_golden()


def test_golden_set_covers_required_kinds():
    names = " ".join(c["name"] for c in GOLDEN)
    assert len(GOLDEN) >= 12
    for fn in ("step_features", "screen_features", "sleep_features", "infer_home", "class_attendance",
               "party_mask", "dwell_entropy"):
        assert any(c["function"] == fn for c in GOLDEN), fn
    assert "3" in names and "79" in names


@pytest.mark.parametrize("case", GOLDEN, ids=[c["name"] for c in GOLDEN])
def test_golden_case(case):
    ok, bad = check(case)
    assert ok, bad


def test_step_bouts_example():
    t = np.arange(8)
    steps = np.array([15, 20, 3, 0, 14, 13, 12, 0], float)
    bt = step_bouts(t, steps)
    act = bt.of(1)
    assert act.size == 2
    assert sorted(bt.duration[act].tolist()) == [2, 3]
    assert sorted(bt.value[act].tolist()) == [35, 39]
    f = step_features(t, steps, 0, 8)
    assert f["stp_total"] == 77 and f["stp_active_max_steps"] == 39


def test_step_bouts_split_on_gap():
    t = np.array([0, 1, 5, 6])
    bt = step_bouts(t, np.array([20, 20, 20, 20], float))
    assert len(bt) == 2


def test_screen_example():
    t = np.array([600, 601, 605, 605])
    ev = np.array(["on", "unlock", "lock", "off"], object)
    (ist, idu), (ust, udu) = screen_sessions(t, ev)
    assert udu.tolist() == [4] and ust.tolist() == [601]
    f = screen_features(t, ev, 600, 660)
    assert f["scr_unlocks_per_min"] == pytest.approx(1 / 60)
    assert f["scr_unl_count"] == 1


def test_entropy_formula():
    h, hn = dwell_entropy([60, 30, 10])
    p = np.array([0.6, 0.3, 0.1])
    assert h == pytest.approx(-(p * np.log(p)).sum(), abs=1e-12)
    assert hn == pytest.approx(h / math.log(3), abs=1e-12)
    assert dwell_entropy([10, 10])[1] == pytest.approx(1.0)
    assert dwell_entropy([42]) == (0.0, 0.0)
    assert all(np.isnan(dwell_entropy([])))


@pytest.mark.parametrize("seed", range(20))
def test_normalized_entropy_bounds(seed):
    d = np.random.default_rng(seed).exponential(size=1 + seed % 6)
    h, hn = dwell_entropy(d)
    assert h >= 0 and 0 <= hn <= 1


def _nights(n_nights, home_share, day0=17616):
    rng = np.random.default_rng(0)
    t, lat, lon = [], [], []
    for d in range(n_nights):
        mins = (day0 + d) * 1440 + np.arange(360)
        at_home = np.arange(360) < round(home_share * 360)
        t.append(mins)
        lat.append(np.where(at_home, 47.65, 47.70) + rng.normal(0, 1e-6, 360))
        lon.append(np.where(at_home, -122.30, -122.35) + rng.normal(0, 1e-6, 360))
    return np.concatenate(t), np.concatenate(lat), np.concatenate(lon)


def test_home_four_nights_at_85_percent():
    h = infer_home(*_nights(4, 0.85))
    assert h is not None and len(h.nights) == 4
    assert haversine_m(h.lat, h.lon, 47.65, -122.30) < 1.0


def test_home_needs_four_nights_and_80_percent():
    assert infer_home(*_nights(3, 0.85)) is None
    assert infer_home(*_nights(4, 0.79)) is None


def test_attendance_boundary():
    block = ClassBlock(0, 600, 650, "B1")
    day = 17616  # a Monday
    t = day * 1440 + np.arange(600, 650)
    for inside, expected in ((30, True), (25, False)):
        where = np.array(["B1"] * inside + ["X"] * (50 - inside), object)
        pct, att = class_attendance(t, where, block, day)
        assert pct == pytest.approx(inside / 50)
        assert bool(att) is expected


def test_party_requires_thirty_minutes_in_evening():
    t = 22 * 60 + np.arange(30)
    labels = np.array(["frat"] * 30, object)
    assert party_mask(t, labels, False).sum() == 30
    assert party_mask(t, labels, True).sum() == 0
    assert party_mask(t[:29], labels[:29], False).sum() == 0
    assert party_mask(t - 8 * 60, labels, False).sum() == 0


def test_breakpoint_examples():
    lin = behavioral_change([1, 2, 3, 4, 5, 6, 7])
    assert (lin.slope_all, lin.first_half_slope, lin.second_half_slope) == pytest.approx((1, 1, 1))
    assert lin.breakpoint_day is None
    v = behavioral_change([1, 2, 3, 4, 3, 2, 1])
    assert v.breakpoint_day == 3  # Thursday
    assert v.slope_before == pytest.approx(1) and v.slope_after == pytest.approx(-1)
    c = behavioral_change([5] * 7)
    assert (c.slope_all, c.first_half_slope, c.second_half_slope) == (0, 0, 0) and c.breakpoint_day is None


def test_breakpoint_ignores_magnitude_only_change():
    r = behavioral_change([0, 1, 2, 3, 6, 9, 12])
    assert r.breakpoint_day is None


def test_weekly_aggregate():
    m, s = weekly_aggregate([2, 4, 6])
    assert m == 4 and s == 2
    m, s = weekly_aggregate([5, np.nan])
    assert m == 5 and np.isnan(s)
    assert all(np.isnan(weekly_aggregate([np.nan, np.nan])))


def test_weekly_features_table():
    days = [dt.date(2018, 3, 26) + dt.timedelta(days=i) for i in range(7)]
    v = np.array([[[1.0], [2.0], [3.0], [4.0], [3.0], [2.0], [1.0]]])
    m = DailyFeatureMatrix.from_values(["p"], days, ["x"], v)
    names, values = weekly_features(m)
    row = dict(zip(names, values[0]))
    assert row["x__mean"] == pytest.approx(16 / 7)
    assert row["x__bkp_day"] == 3
    assert row["x__slope_pre"] == pytest.approx(1.0)
