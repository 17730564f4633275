import dataclasses

import numpy as np
import pytest

from earlyrisk.domain import HIGH, LOW, SENSORS, Stream
from earlyrisk.errors import ConfigError
from earlyrisk.synth import (CohortConfig, PlantedEffect, generate_cohort, generate_cohort_pair, generate_labels,
                             inject_missingness, read_cohort, write_cohort)


def test_low_fraction_matches_config():
    labels = generate_labels(CohortConfig(seed=1, n_participants=188))
    n_low = int(np.sum(labels.binary_current == LOW))
    assert abs(n_low - 43) <= 2
    assert np.all((labels.gpa_current >= 0) & (labels.gpa_current <= 4))


def test_generate_labels_matches_cohort(small_cohort):
    labels = generate_labels(small_cohort.config)
    np.testing.assert_array_equal(labels.gpa_current, small_cohort.labels.gpa_current)
    np.testing.assert_array_equal(labels.gpa_prior, small_cohort.labels.gpa_prior)
    assert labels.participants == small_cohort.participants


def test_determinism(tmp_path, small_cohort):
    again = generate_cohort(small_cohort.config)
    a = write_cohort(small_cohort, tmp_path / "a")
    b = write_cohort(again, tmp_path / "b")
    for pa, pb in zip(a, b):
        assert pa.read_bytes() == pb.read_bytes(), pa.name


def test_cohort_round_trip(tmp_path, small_cohort):
    write_cohort(small_cohort, tmp_path)
    back = read_cohort(tmp_path)
    assert back.participants == small_cohort.participants
    np.testing.assert_allclose(back.labels.gpa_current, small_cohort.labels.gpa_current, atol=1e-6)
    pid = small_cohort.participants[0]
    for sensor, s in small_cohort.streams[pid].items():
        np.testing.assert_array_equal(back.streams[pid][sensor].t, s.t)
    assert back.schedules[pid] == small_cohort.schedules[pid]


def test_all_nine_sensors_rendered(small_cohort):
    pid = small_cohort.participants[0]
    assert set(small_cohort.streams[pid]) <= set(SENSORS)
    present = set().union(*(small_cohort.streams[p] for p in small_cohort.participants))
    assert present == set(SENSORS)


def test_planted_attendance_tracks_latent_risk():
    cohort = generate_cohort(CohortConfig(seed=3, n_participants=40, outage_rate=0.0))
    gt = cohort.ground_truth
    pids = cohort.participants
    z = np.array([gt.latent[p] for p in pids])
    att = np.array([gt.realized["class_attendance"][p] for p in pids])
    # attendance is planted with a positive direction: higher risk, fewer classes
    assert np.corrcoef(z, att)[0, 1] < -0.3
    y = cohort.labels.binary_current
    assert att[y == HIGH].mean() > att[y == LOW].mean()


def test_full_persistence_copies_prior():
    labels = generate_labels(CohortConfig(seed=4, n_participants=50, persistence=1.0))
    np.testing.assert_allclose(labels.gpa_prior, labels.gpa_current)
    partial = generate_labels(CohortConfig(seed=4, n_participants=50, persistence=0.6))
    assert not np.allclose(partial.gpa_prior, partial.gpa_current)


def _stream(n=3000):
    return {"StepMinute": Stream("StepMinute", np.arange(n), {"steps": np.ones(n)})}


@pytest.mark.parametrize("rate", [0.0, 1.0, 0.33])
def test_missingness_rates(rate):
    out = inject_missingness(_stream(), {"StepMinute": rate}, seed=5)
    kept = len(out["StepMinute"])
    if rate == 0.0:
        assert kept == 3000
    elif rate == 1.0:
        assert kept == 0
    else:
        # binomial SD is about 26 events
        assert abs((3000 - kept) - 990) < 130


def test_missingness_deterministic():
    a = inject_missingness(_stream(), {"StepMinute": 0.5}, seed=9)["StepMinute"].t
    b = inject_missingness(_stream(), {"StepMinute": 0.5}, seed=9)["StepMinute"].t
    np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("kw", [{"low_performer_fraction": 0.0}, {"n_participants": 1}, {"n_days": 6},
                                {"persistence": 1.5}, {"missingness": {"Radar": 0.1}},
                                {"start_date": "2018-02-30"}, {"trait_prevalences": {"urm": 1.0}}])
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        CohortConfig(**kw)


def test_planted_effect_validation():
    assert PlantedEffect("party", "-").direction == -1
    with pytest.raises(ConfigError):
        PlantedEffect("juggling", 1)
    with pytest.raises(ConfigError):
        PlantedEffect("party", 0)


def test_config_dict_round_trip():
    cfg = CohortConfig(seed=3, n_participants=20, missingness={"Wifi": 0.1})
    assert CohortConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ConfigError):
        CohortConfig.from_dict({"seed": 1, "bogus": 2})


def test_pair_rejects_conflicting_signs():
    a = CohortConfig(seed=1, n_participants=4)
    b = dataclasses.replace(a, planted_effects=(PlantedEffect("class_attendance", -1),))
    with pytest.raises(ConfigError):
        generate_cohort_pair(a, b)
