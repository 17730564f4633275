import logging
from dataclasses import replace

import numpy as np
import pytest

from earlyrisk.domain import HIGH, LOW, LabelSet
from earlyrisk.errors import DataError, DomainError, LeakageError
from earlyrisk.learners.cnn import TrainConfig
from earlyrisk.pipelines.cnn import (CnnPipelineConfig, duplicate_balance, ffill_bfill, run_cnn_pipeline,
                                     stratified_folds, stratified_split)
from earlyrisk.pipelines.data import make_cohort_data, weekly_table
from earlyrisk.pipelines.lr import (MISSING_FILL, LrPipelineConfig, cfs_select, impute_train_mean, prune_collinear,
                                    run_lr_pipeline, smote)
from earlyrisk.pipelines.mtl import TransferConfig, run_mtl_pipeline


def test_impute_train_mean():
    train = np.array([[1.0, np.nan], [3.0, np.nan], [np.nan, np.nan]])
    test = np.array([[np.nan, np.nan]])
    tr, te, fill = impute_train_mean(train, test)
    assert tr[2, 0] == 2.0 and te[0, 0] == 2.0
    assert fill[1] == MISSING_FILL and te[0, 1] == MISSING_FILL


def test_smote_balances_on_segments(rng):
    x = rng.normal(size=(50, 3))
    y = np.array([LOW] * 10 + [HIGH] * 40)
    xb, yb, info = smote(x, y, seed=1)
    assert np.sum(yb == LOW) == 40 and np.sum(yb == HIGH) == 40
    np.testing.assert_array_equal(xb[:50], x)
    synth = xb[50:]
    expect = x[info["base"]] + info["gap"][:, None] * (x[info["neighbor"]] - x[info["base"]])
    np.testing.assert_allclose(synth, expect)
    assert np.all(y[info["base"]] == LOW) and np.all(y[info["neighbor"]] == LOW)
    assert np.all((info["gap"] >= 0) & (info["gap"] < 1))


def test_smote_rejects_single_minority():
    with pytest.raises(DomainError):
        smote(np.zeros((4, 1)), np.array([LOW, HIGH, HIGH, HIGH]))


def test_prune_duplicate_column(rng):
    a = rng.normal(size=30)
    x = np.column_stack([a, rng.normal(size=30), a])
    assert prune_collinear(x, ["a", "b", "c"]) == ["a", "b"]
    # order of the input columns does not matter, sorted names decide
    assert prune_collinear(x[:, ::-1], ["c", "b", "a"]) == ["a", "b"]


def _pair_with_r(r, n=40, seed=0):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(np.column_stack([np.ones(n), rng.normal(size=(n, 2))]))
    u, e = q[:, 1], q[:, 2]  # orthonormal and centred
    return np.column_stack([u, r * u + np.sqrt(1 - r * r) * e])


def test_prune_cutoff_is_strict():
    assert prune_collinear(_pair_with_r(0.7), ["a", "b"], 0.7) == ["a", "b"]
    assert prune_collinear(_pair_with_r(0.7001), ["a", "b"], 0.7) == ["a"]


def test_cfs_picks_signal_and_falls_back(rng):
    n = 60
    t = rng.normal(size=n)
    x = np.column_stack([t + rng.normal(0, 0.3, n), rng.normal(size=(n, 4))])
    y = np.where(t > 0, HIGH, LOW)
    res = cfs_select(x, y, x, t, x[:5], y[:5], grid=(0.05, 0.3))
    assert 0 in res.selected and not res.fallback
    noise = rng.normal(size=(n, 12))
    res = cfs_select(noise, y, noise, rng.normal(size=n), noise[:5], y[:5], grid=(0.05,), alpha=1e-9)
    assert res.fallback and len(res.selected) == 10


def test_lr_pipeline_folds_and_order(small_data):
    run = run_lr_pipeline(small_data)
    assert len(run.folds) == len(small_data.participants)
    held = [p for f in run.folds for p in f.held_out]
    assert sorted(held) == sorted(small_data.participants)
    pids, prob, pred, _ = run.predictions()
    rev = small_data.subset(small_data.participants[::-1])
    pids2, prob2, _, _ = run_lr_pipeline(rev).predictions()
    lookup = dict(zip(pids2, prob2))
    np.testing.assert_allclose(prob, [lookup[p] for p in pids])
    assert run.leakage


def test_lr_config_validation():
    with pytest.raises(DomainError):
        LrPipelineConfig(cfs_grid=())
    with pytest.raises(DomainError):
        LrPipelineConfig(cfs_grid=(1.5,))


def test_ffill_bfill():
    x = np.array([np.nan, 2, np.nan, 4])[:, None]
    np.testing.assert_array_equal(ffill_bfill(x)[:, 0], [2, 2, 2, 4])
    assert np.isnan(ffill_bfill(np.full((3, 1), np.nan))).all()


def test_duplicate_balance():
    x = np.arange(120, dtype=float)[:, None]
    y = np.array([LOW] * 30 + [HIGH] * 90)
    xb, yb, dup = duplicate_balance(x, y, seed=3)
    assert np.sum(yb == LOW) == 90 and len(dup) == 60
    assert set(xb[120:, 0]) <= set(range(30))


def test_split_and_folds_disjoint(rng):
    pids = [f"p{i:02d}" for i in range(40)]
    y = np.array([LOW] * 10 + [HIGH] * 30)
    train, test = stratified_split(pids, y, 0.2, rng)
    assert len(test) == 8 and not set(train) & set(test)
    folds = stratified_folds(train, np.array([y[pids.index(p)] for p in train]), 5, rng)
    flat = [p for f in folds for p in f]
    assert sorted(flat) == sorted(train) and len(set(flat)) == len(flat)


def test_cnn_pipeline_smoke(small_data):
    cfg = CnnPipelineConfig(train=TrainConfig(epochs=3, learning_rate=1e-3), n_repeats=2, n_folds=2,
                            lr_grid=(1e-3,), arch={"channels": 2, "hidden": 4})
    run = run_cnn_pipeline(small_data, cfg)
    assert len(run.repeats) == 2
    for r in run.repeats:
        assert not set(r.test_ids) & set(r.train_ids)
        assert not set().union(*map(set, r.cv_folds)) & set(r.test_ids)
        assert np.all((r.prob_low >= 0) & (r.prob_low <= 1))
    again = run_cnn_pipeline(small_data, cfg)
    np.testing.assert_array_equal(run.repeats[0].prob_low, again.repeats[0].prob_low)


def _sealed_b(small_cohort, small_data, prior=True):
    lab = small_cohort.labels
    gp = lab.gpa_prior if prior else np.full(len(lab.participants), np.nan)
    labels = LabelSet(lab.participants, lab.gpa_current, gp)
    return make_cohort_data("B", small_data.daily, labels, small_cohort.self_report, seal=True)


def test_mtl_refuses_unsealed_target(small_data):
    with pytest.raises(LeakageError):
        run_mtl_pipeline(small_data, small_data)


def test_mtl_without_b_prior_notes_it(small_cohort, small_data, caplog):
    b = _sealed_b(small_cohort, small_data, prior=False)
    cfg = TransferConfig(train=TrainConfig(epochs=2, learning_rate=1e-3), arch={"channels": 2, "hidden": 4})
    with caplog.at_level(logging.WARNING):
        res = run_mtl_pipeline(small_data, b, cfg)
    assert res.notes and "no prior-term labels" in res.notes[0]
    assert any("no prior-term labels" in r.message for r in caplog.records)
    assert res.lineage.current == {small_data.cohort_id} and "B" not in res.lineage.prior
    assert not b.sealed.opened


def test_sealed_cohort_cannot_be_subset(small_cohort, small_data):
    b = _sealed_b(small_cohort, small_data)
    with pytest.raises(DataError):
        b.subset(b.participants[:2])
    with pytest.raises(DataError):
        b.current_labels()


def test_weekly_table_sorted(small_data):
    names, x = weekly_table(small_data)
    assert names == sorted(names) and x.shape == (len(small_data.participants), len(names))
