import datetime as dt

import numpy as np
import pandas as pd
import pytest

from earlyrisk.domain import (HIGH, LOW, DailyFeatureMatrix, Epoch, LabelSet, ProtectedTraits, SensorEvent, Stream,
                              TRAITS, cap_outliers_iqr, cap_outliers_matrix, day_number, drop_all_missing,
                              label_from_gpa, label_name, labels_from_gpa, one_hot, parse_label, read_labels_csv,
                              read_streams_csv, slice_epoch, to_minutes, write_labels_csv, write_streams_csv)
from earlyrisk.errors import DataError, DomainError


@pytest.mark.parametrize("gpa,label", [(3.69, HIGH), (3.2, LOW), (0.0, LOW), (4.0, HIGH), (3.21, HIGH)])
def test_label_from_gpa(gpa, label):
    assert label_from_gpa(gpa) == label


@pytest.mark.parametrize("bad", [-0.01, 4.01, float("nan")])
def test_label_from_gpa_rejects_out_of_range(bad):
    with pytest.raises(DomainError):
        label_from_gpa(bad)


def test_labels_from_gpa_marks_missing():
    np.testing.assert_array_equal(labels_from_gpa([3.5, np.nan, 3.2]), [HIGH, -1, LOW])
    with pytest.raises(DomainError):
        labels_from_gpa([5.0])


def test_label_names_round_trip():
    assert label_name(HIGH) == "High" and label_name(LOW) == "Low"
    assert parse_label(" HIGH ") == HIGH and parse_label("low") == LOW
    with pytest.raises(DataError):
        parse_label("medium")


def test_cap_outliers_upper_fence():
    # linear-interpolation quartiles of {1,2,3,100}: Q1 = 1.75, Q3 = 27.25, fence = 27.25 + 1.5 * 25.5
    out = cap_outliers_iqr([1, 2, 3, 100])
    np.testing.assert_allclose(out, [1, 2, 3, 65.5])


def test_cap_outliers_zero_iqr_and_missing():
    np.testing.assert_array_equal(cap_outliers_iqr([5, 5, 5, 5]), [5, 5, 5, 5])
    out = cap_outliers_iqr([1, 2, np.nan, 3])
    assert np.isnan(out[2]) and list(out[[0, 1, 3]]) == [1, 2, 3]
    out = cap_outliers_iqr([1, 2, np.nan, 3, 4, 400])
    assert np.isnan(out[2]) and out[-1] < 400


def test_cap_outliers_matrix_skips_named_features():
    v = np.array([[[1, 1], [2, 2], [3, 3], [100, 100]]], dtype=float)
    m = DailyFeatureMatrix.from_values(["p"], list(range(4)), ["a", "b"], v)
    out = cap_outliers_matrix(m, skip=["b"])
    assert out.values[0, 3, 0] == 65.5 and out.values[0, 3, 1] == 100


def test_one_hot():
    out = one_hot(["A", "B", "A"])
    assert list(out) == ["A", "B"]
    np.testing.assert_array_equal(out["A"], [1, 0, 1])
    np.testing.assert_array_equal(out["B"], [0, 1, 0])
    single = one_hot(["x", "x"])
    assert list(single) == ["x"] and np.all(single["x"] == 1)
    miss = one_hot(["A", None])
    assert miss["A"][0] == 1 and np.isnan(miss["A"][1])


def _matrix(mask_feature=None, all_missing=False):
    v = np.arange(2 * 3 * 3, dtype=float).reshape(2, 3, 3)
    if mask_feature is not None:
        v[:, :, mask_feature] = np.nan
    if all_missing:
        v[:] = np.nan
    return DailyFeatureMatrix.from_values(["p1", "p2"], [dt.date(2018, 3, 26 + i) for i in range(3)],
                                          ["a", "b", "c"], v)


def test_drop_all_missing():
    assert drop_all_missing(_matrix(1)).features == ["a", "c"]
    m = _matrix()
    assert drop_all_missing(m) is m
    assert drop_all_missing(_matrix(all_missing=True)).features == []


def test_daily_matrix_long_round_trip():
    m = _matrix(1)
    back = DailyFeatureMatrix.from_long(m.to_long(), m.participants, m.days, m.features)
    np.testing.assert_array_equal(back.mask, m.mask)
    np.testing.assert_array_equal(back.values[~back.mask], m.values[~m.mask])


def test_daily_matrix_shape_check():
    with pytest.raises(DomainError):
        DailyFeatureMatrix(["p"], [0], ["a"], np.zeros((1, 2, 1)), np.zeros((1, 2, 1), bool))


def test_slice_epoch_half_open():
    day = dt.date(2018, 3, 26)
    base = day_number(day) * 1440
    s = Stream("StepMinute", [base + 360, base + 719, base + 720], {"steps": [1.0, 2.0, 3.0]})
    out = slice_epoch(s, day, Epoch.MORNING)
    assert list(out["steps"]) == [1.0, 2.0]
    events = s.events("p")
    assert [e.timestamp for e in slice_epoch(events, day, Epoch.MORNING)] == [base + 360, base + 719]
    assert slice_epoch([], day, Epoch.MORNING) == []


def test_stream_validation():
    with pytest.raises(DomainError):
        Stream("StepMinute", [2, 1], {"steps": [1.0, 2.0]})
    with pytest.raises(DomainError):
        SensorEvent("p", 0, "Screen", {})
    with pytest.raises(DomainError):
        SensorEvent("p", 0, "Radar", {})


def test_streams_csv_round_trip(tmp_path):
    t0 = to_minutes("2018-03-26T10:00")
    streams = {"p1": {"Screen": Stream("Screen", [t0, t0 + 5], {"event": np.array(["on", "off"], object)}),
                      "Location": Stream("Location", [t0], {"lat": [47.655], "lon": [-122.305]})}}
    write_streams_csv(tmp_path / "s.csv", streams)
    back = read_streams_csv(tmp_path / "s.csv")
    assert list(back["p1"]["Screen"]["event"]) == ["on", "off"]
    assert back["p1"]["Location"]["lat"][0] == pytest.approx(47.655)
    np.testing.assert_array_equal(back["p1"]["Screen"].t, [t0, t0 + 5])


def test_streams_csv_reports_line_of_bad_timestamp(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("participant_id,timestamp,sensor,payload\n"
                 "p1,2018-03-26T10:00,Screen,event=on\n"
                 "p1,2018-13-26T10:00,Screen,event=off\n")
    with pytest.raises(DataError) as exc:
        read_streams_csv(p)
    assert exc.value.line == 3


def test_streams_csv_bad_payload(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("participant_id,timestamp,sensor,payload\np1,2018-03-26T10:00,StepMinute,steps=abc\n")
    with pytest.raises(DataError):
        read_streams_csv(p)


def test_labels_csv_round_trip(tmp_path):
    pids = ("a", "b")
    labels = LabelSet(pids, np.array([3.5, 2.0]), np.array([np.nan, 3.1]))
    traits = ProtectedTraits(pids, {t: np.array([True, False]) for t in TRAITS})
    write_labels_csv(tmp_path / "l.csv", labels, traits)
    back, tr = read_labels_csv(tmp_path / "l.csv")
    np.testing.assert_array_equal(back.gpa_current, [3.5, 2.0])
    assert np.isnan(back.gpa_prior[0]) and tr.group("urm").tolist() == [True, False]
    write_labels_csv(tmp_path / "sealed.csv", labels, traits, include_current=False)
    assert np.isnan(read_labels_csv(tmp_path / "sealed.csv")[0].gpa_current).all()


def test_labels_csv_rejects_bad_gpa(tmp_path):
    p = tmp_path / "l.csv"
    p.write_text("participant_id,gpa_current,gpa_prior,urm,firstgen,gender_min,sexual_min\na,4.5,,0,0,0,0\n")
    with pytest.raises(DataError):
        read_labels_csv(p)
    p.write_text("participant_id,gpa_current,gpa_prior,urm,firstgen,gender_min,sexual_min\na,3.5,,2,0,0,0\n")
    with pytest.raises(DataError):
        read_labels_csv(p)
