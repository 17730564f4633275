from types import SimpleNamespace

import numpy as np
import pytest

from earlyrisk.domain import HIGH, LOW
from earlyrisk.errors import DomainError, LineageError
from earlyrisk.eval.fairness import (demographic_parity, equal_opportunity, equalized_odds, fairness_records,
                                     is_reasonable)
from earlyrisk.eval.importance import importance_ranking
from earlyrisk.eval.metrics import auc_score, classification_metrics
from earlyrisk.eval.planted import feature_family, planted_recovery
from earlyrisk.eval.report import build_report, generalizability_report, summary_markdown, validate_report
from earlyrisk.eval.transitions import transition_breakdown
from earlyrisk.learners.baselines import zero_rule
from earlyrisk.seal import CURRENT, Lineage, SealedLabels, TaggedLabels


def _counts(tp, fp, tn, fn):
    y_true = [HIGH] * tp + [LOW] * fp + [LOW] * tn + [HIGH] * fn
    y_pred = [HIGH] * tp + [HIGH] * fp + [LOW] * tn + [LOW] * fn
    return np.array(y_true), np.array(y_pred)


def test_metrics_from_confusion():
    yt, yp = _counts(3, 1, 4, 2)
    m = classification_metrics(yt, yp)
    assert m["precision"] == pytest.approx(0.75)
    assert m["recall"] == pytest.approx(0.6)
    assert m["f1"] == pytest.approx(2 / 3)
    assert m["kappa"] == pytest.approx(0.4)
    assert m["accuracy"] == pytest.approx(0.7)
    assert np.isnan(m["auc"])


def test_metrics_match_sklearn(rng):
    from sklearn import metrics as skm
    yt = rng.integers(0, 2, 50)
    yp = rng.integers(0, 2, 50)
    p = rng.random(50)
    m = classification_metrics(yt, yp, p)
    assert m["precision"] == pytest.approx(skm.precision_score(yt, yp, pos_label=HIGH))
    assert m["recall"] == pytest.approx(skm.recall_score(yt, yp, pos_label=HIGH))
    assert m["f1"] == pytest.approx(skm.f1_score(yt, yp, pos_label=HIGH))
    assert m["kappa"] == pytest.approx(skm.cohen_kappa_score(yt, yp))
    assert m["balanced_accuracy"] == pytest.approx(skm.balanced_accuracy_score(yt, yp))
    assert m["auc"] == pytest.approx(skm.roc_auc_score(yt == LOW, p))


def test_auc_edge_cases():
    assert auc_score([True, False], [0.5, 0.5]) == 0.5
    assert np.isnan(auc_score([True, True], [0.1, 0.2]))
    with pytest.raises(DomainError):
        classification_metrics([HIGH, 2], [HIGH, HIGH])


def _group_preds(rate_u, rate_p, n=10):
    k_u, k_p = round(rate_u * n), round(rate_p * n)
    pred = np.array([1] * k_u + [0] * (n - k_u) + [1] * k_p + [0] * (n - k_p))
    group = np.array([False] * n + [True] * n)
    return pred, group


def test_demographic_parity():
    pred, group = _group_preds(0.3, 0.6)
    r = demographic_parity(pred, group)
    assert r.difference == pytest.approx(0.3)
    assert r.ratio == pytest.approx(0.5)
    assert r.signed_difference == pytest.approx(-0.3)
    assert not r.reasonable


def _outcomes(tpr, fpr, n=10):
    kp, kn = round(tpr * n), round(fpr * n)
    yt = np.array([1] * n + [0] * n)
    yp = np.array([1] * kp + [0] * (n - kp) + [1] * kn + [0] * (n - kn))
    return yt, yp


def test_equalized_odds():
    yt_p, yp_p = _outcomes(0.8, 0.2)
    yt_u, yp_u = _outcomes(0.6, 0.3)
    yt = np.concatenate([yt_u, yt_p])
    yp = np.concatenate([yp_u, yp_p])
    group = np.array([False] * 20 + [True] * 20)
    r = equalized_odds(yt, yp, group)
    assert r.difference == pytest.approx(0.2)
    # min(TPR ratio 0.6 / 0.8, FNR ratio 0.4 / 0.2)
    assert r.ratio == pytest.approx(0.75)


def test_equal_opportunity():
    yt = np.ones(20, dtype=int)
    yp = np.array([1] * 6 + [0] * 4 + [1] * 9 + [0])
    group = np.array([False] * 10 + [True] * 10)
    r = equal_opportunity(yt, yp, group)
    assert r.difference == pytest.approx(0.3)
    assert r.ratio == pytest.approx(2 / 3)


def test_fairness_ratio_conventions():
    pred, group = _group_preds(0.3, 0.0)
    assert demographic_parity(pred, group).ratio == np.inf
    pred, group = _group_preds(0.0, 0.0)
    r = demographic_parity(pred, group)
    assert r.ratio == 1.0 and r.reasonable


def test_fairness_undefined_group():
    r = equal_opportunity(np.array([1, 1, 0]), np.array([1, 0, 0]), np.array([False, False, True]))
    assert not r.defined and np.isnan(r.difference) and not r.reasonable


@pytest.mark.parametrize("diff,ratio,ok", [(0.051, 1.054, True), (0.1, 0.8, True), (0.4 - 0.3, 1.2, True),
                                           (0.1001, 1.0, False), (0.0, 0.7999, False), (0.0, 1.2001, False),
                                           (np.nan, 1.0, False)])
def test_reasonable_gate(diff, ratio, ok):
    assert is_reasonable(diff, ratio) is ok


def test_transitions():
    prior = np.array([HIGH, HIGH, LOW, LOW, HIGH, -1])
    cur = np.array([HIGH, HIGH, LOW, HIGH, LOW, HIGH])
    pred = np.array([HIGH, LOW, LOW, HIGH, HIGH, HIGH])
    b = transition_breakdown(prior, cur, pred)
    assert b.counts == {"stay_high": 2, "stay_low": 1, "change_to_high": 1, "change_to_low": 1}
    assert b.accuracies["stay_high"] == 0.5 and b.accuracies["change_to_low"] == 0.0
    assert b.unclassified == 1 and b.total == 5


def test_importance_ranking():
    folds = [SimpleNamespace(selected=["a", "b"], importance=[0.5, 1.0], coef=[-0.5, 1.0]),
             SimpleNamespace(selected=["a"], importance=[0.7], coef=[-0.7])]
    r = importance_ranking(folds)
    assert r["feature"].tolist() == ["a", "b"]
    assert r["score"].tolist() == pytest.approx([1.2, 1.0])
    assert r["n_folds"].tolist() == [2, 1]
    assert r["impact"].tolist() == ["+", "-"]


def test_planted_recovery():
    assert feature_family("cls_num_attended__allday__mean") == "class_attendance"
    assert feature_family("cls_num_attended__allday__std") is None
    folds = [SimpleNamespace(selected=["cls_num_attended__allday__mean", "scr_int_count__morning__mean"],
                             importance=[1.0, 0.5], coef=[-1.0, -0.5])]
    rec = planted_recovery(importance_ranking(folds), [{"feature_family": "class_attendance", "direction": 1},
                                                      {"feature_family": "weekday_phone_use", "direction": -1}])
    assert rec["class_attendance"]["recovered"] and rec["class_attendance"]["rank"] == 1
    assert not rec["weekday_phone_use"]["recovered"]


def test_report_schema_and_markdown(rng):
    yt = rng.integers(0, 2, 30)
    yp = rng.integers(0, 2, 30)
    traits = {"urm": rng.random(30) < 0.3, "firstgen": rng.random(30) < 0.5}
    rep = build_report(yt, yp, rng.random(30), traits, prior=yt, approach="lr", cohort="A")
    validate_report(rep)
    assert len(rep["fairness"]) == 6
    md = summary_markdown(rep)
    assert "urm" in md and "| accuracy |" in md


def test_generalizability_refuses_trained_cohort():
    sealed = SealedLabels([HIGH, LOW], "B")
    lineage = Lineage().add(TaggedLabels([1], CURRENT, "B"))
    with pytest.raises(LineageError):
        generalizability_report(np.array([HIGH, LOW]), None, sealed, lineage)
    assert not sealed.opened


def test_generalizability_zero_rule_auc():
    sealed = SealedLabels([HIGH, LOW, LOW, HIGH], "B")
    zr = zero_rule([HIGH, HIGH, LOW])
    rep = generalizability_report(zr.predict(n=4), zr.predict_proba(n=4), sealed, Lineage(frozenset({"A"})),
                                  approach="zero_rule")
    assert rep["metrics"]["auc"] == 0.5 and rep["metrics"]["accuracy"] == 0.5
    assert sealed.opened
    validate_report(rep)


def test_fairness_records_cover_all_traits(rng):
    yt = rng.integers(0, 2, 40)
    recs = fairness_records(yt, yt, {"urm": rng.random(40) < 0.5})
    assert [r.metric for r in recs] == ["demographic_parity", "equalized_odds", "equal_opportunity"]
    assert recs[1].difference == 0.0
