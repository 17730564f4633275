import numpy as np
import pytest

from earlyrisk.domain import HIGH, LOW
from earlyrisk.errors import DataError, DomainError, LeakageError
from earlyrisk.learners.baselines import hinge_objective, one_rule_svm_fit, zero_rule
from earlyrisk.learners.cnn import Cnn1dModel, CnnArch, TrainConfig, cnn_fit, cnn_forward, cnn_loss_and_grad
from earlyrisk.learners.gradcheck import (cnn_gradient_check, gradient_check, hinge_gradient_check,
                                          lr_gradient_check)
from earlyrisk.learners.logistic import LogisticModel, LrConfig, lr_fit, lr_loss, lr_predict, lr_predict_proba
from earlyrisk.learners.mtl import MtlModel, mtl_fit, mtl_step_grads
from earlyrisk.learners.persist import load_model, model_from_dict, model_to_dict, save_model
from earlyrisk.seal import CURRENT, PRIOR, SealedLabels, TaggedLabels

# logistic regression


def test_sigmoid_of_half():
    m = LogisticModel(np.array([1.0]), 0.0, LrConfig())
    assert lr_predict_proba(m, [[0.5]])[0] == pytest.approx(0.622459, abs=1e-6)
    assert lr_predict(m, [[0.5], [-0.5]]).tolist() == [LOW, HIGH]


def test_lr_separable_sign(rng):
    x = rng.normal(size=(60, 1))
    y = np.where(x[:, 0] > 0, HIGH, LOW)
    m = lr_fit(x, y)
    # more of the feature means High, so the weight on P(Low) is negative
    assert m.weights[0] < 0
    assert np.mean(lr_predict(m, x) == y) > 0.95


def test_lr_matches_sklearn(rng):
    from sklearn.linear_model import LogisticRegression
    x = rng.normal(size=(80, 3))
    y = np.where(x @ [1.0, -0.5, 0.2] + rng.normal(0, 0.5, 80) > 0, HIGH, LOW)
    lam = 0.1
    m = lr_fit(x, y, LrConfig(lam=lam, tol=1e-10, max_iter=50000))
    ref = LogisticRegression(C=1.0 / (lam * len(y)), tol=1e-12, max_iter=10000).fit(x, (y == LOW).astype(int))
    np.testing.assert_allclose(m.weights, ref.coef_[0], atol=1e-5)
    assert m.bias == pytest.approx(ref.intercept_[0], abs=1e-5)


def test_lr_rejects_bad_input():
    x = np.zeros((4, 2))
    with pytest.raises(DomainError):
        lr_fit(x, [HIGH] * 4)
    with pytest.raises(DomainError):
        lr_fit(np.full((2, 1), np.nan), [HIGH, LOW])
    with pytest.raises(DomainError):
        lr_fit(x, [HIGH, LOW])


def test_lr_gradient(rng):
    x = rng.normal(size=(20, 3))
    t = (rng.random(20) < 0.4).astype(float)
    assert lr_gradient_check(rng.normal(size=3), 0.3, x, t, 0.1) < 1e-6


def test_lr_loss_at_zero_is_log2():
    x = np.ones((4, 2))
    assert lr_loss(np.zeros(2), 0.0, x, np.array([0, 1, 0, 1.0]), 0.5) == pytest.approx(np.log(2))


# baselines


def test_zero_rule_majority_and_tie():
    assert zero_rule([LOW, LOW, HIGH]).label == LOW
    assert zero_rule([LOW, HIGH]).label == HIGH
    z = zero_rule([HIGH, HIGH, LOW])
    assert z.predict(n=3).tolist() == [HIGH] * 3 and z.predict_proba(n=2).tolist() == [0.0, 0.0]


def test_one_rule_threshold_between_classes():
    gpa = np.array([2.5, 2.8, 3.0, 3.5, 3.7, 3.9])
    y = np.array([LOW, LOW, LOW, HIGH, HIGH, HIGH])
    m = one_rule_svm_fit(gpa, y)
    assert 3.0 < m.threshold < 3.5
    assert m.predict(gpa).tolist() == y.tolist()


def test_one_rule_separates_at_hundredths():
    gpa = np.array([3.19, 3.20, 3.21, 3.22])
    y = np.array([LOW, LOW, HIGH, HIGH])
    m = one_rule_svm_fit(gpa, y)
    assert m.predict(gpa).tolist() == y.tolist()


def test_one_rule_rejects_single_class_and_missing():
    with pytest.raises(DomainError):
        one_rule_svm_fit([3.0, 3.5], [HIGH, HIGH])
    with pytest.raises(DomainError):
        one_rule_svm_fit([3.0, np.nan], [HIGH, LOW])


def test_hinge_gradient_off_kink():
    x = np.array([-1.0, -0.3, 0.4, 1.2])
    s = np.array([-1.0, -1.0, 1.0, 1.0])
    assert hinge_gradient_check(0.7, 0.1, x, s) < 1e-4
    assert hinge_objective(0.0, 0.0, x, s) == pytest.approx(4.0)


# gradient checker


def test_gradcheck_quadratic():
    p = {"a": np.array([1.0, -2.0, 3.0])}
    assert gradient_check(lambda: (float(np.sum(p["a"] ** 2)), {"a": 2 * p["a"]}), p) < 1e-8
    wrong = gradient_check(lambda: (float(np.sum(p["a"] ** 2)), {"a": 3 * p["a"]}), p)
    assert wrong > 0.3


def test_gradcheck_parameter_limit():
    p = {"a": np.zeros(501)}
    with pytest.raises(ValueError):
        gradient_check(lambda: (0.0, {"a": p["a"]}), p)


# CNN


def _arch(**kw):
    return CnnArch(n_days=7, n_features=3, **{"channels": 2, "hidden": 4, **kw})


def test_cnn_shapes():
    a = _arch()
    assert a.conv_length == 5 and a.pooled_length == 2
    with pytest.raises(DomainError):
        CnnArch(n_days=2, n_features=1, kernel=3)


def test_cnn_softmax_rows(rng):
    m = Cnn1dModel.initialise(_arch(), seed=1)
    p = cnn_forward(m, rng.normal(size=(5, 7, 3)))
    assert p.shape == (5, 2)
    np.testing.assert_allclose(p.sum(axis=1), 1.0)


def test_cnn_gradient(rng):
    m = Cnn1dModel.initialise(_arch(dropout=0.0), seed=2)
    x = rng.normal(size=(4, 7, 3))
    assert cnn_gradient_check(m, x, np.array([0, 1, 1, 0])) < 1e-4


def _separable(rng, n=24):
    y = np.arange(n) % 2
    x = rng.normal(size=(n, 7, 3)) + 1.5 * (2 * y - 1)[:, None, None]
    return x, y


def test_cnn_loss_decreases(rng):
    x, y = _separable(rng)
    m0 = Cnn1dModel.initialise(_arch(), seed=3)
    m, hist = cnn_fit(m0, x, y, TrainConfig(epochs=30, learning_rate=1e-2, seed=0))
    assert hist.train_loss[-1] < hist.train_loss[0]
    assert cnn_loss_and_grad(m, x, y)[0] < cnn_loss_and_grad(m0, x, y)[0]


def test_cnn_early_stopping(rng):
    x, y = _separable(rng)
    xv = rng.normal(size=(8, 7, 3))
    yv = np.array([0, 1] * 4)
    _, hist = cnn_fit(Cnn1dModel.initialise(_arch(), seed=4), x, y,
                      TrainConfig(epochs=200, learning_rate=5e-2, patience=3, seed=0), xv, yv)
    assert hist.stopped_early and len(hist) < 200
    assert hist.best_epoch == int(np.argmin(hist.val_loss)) + 1


def test_cnn_fit_deterministic(rng):
    x, y = _separable(rng)
    cfg = TrainConfig(epochs=5, learning_rate=1e-2, seed=7)
    a, _ = cnn_fit(Cnn1dModel.initialise(_arch(), seed=5), x, y, cfg)
    b, _ = cnn_fit(Cnn1dModel.initialise(_arch(), seed=5), x, y, cfg)
    for k in a.params:
        np.testing.assert_array_equal(a.params[k], b.params[k])


def test_cnn_rejects_missing_inputs():
    x = np.full((2, 7, 3), np.nan)
    with pytest.raises(DomainError):
        cnn_fit(Cnn1dModel.initialise(_arch()), x, np.array([0, 1]), TrainConfig(epochs=1))


# multi-task


def test_mtl_trunk_is_shared(rng):
    m = MtlModel.initialise(_arch(dropout=0.0), seed=0)
    assert m.task_model("primary").trunk is m.task_model("secondary").trunk is m.trunk
    xp, xs = rng.normal(size=(3, 7, 3)), rng.normal(size=(3, 7, 3))
    yp, ys = np.array([0, 1, 0]), np.array([1, 1, 0])
    _, g = mtl_step_grads(m, xp, yp, xs, ys, training=False)
    _, gp = cnn_loss_and_grad(m.task_model("primary"), xp, yp)
    _, gs = cnn_loss_and_grad(m.task_model("secondary"), xs, ys)
    np.testing.assert_allclose(g["trunk.conv_w"], gp["conv_w"] + gs["conv_w"])
    np.testing.assert_allclose(g["secondary.d1_w"], gs["d1_w"])


def test_mtl_guards_labels(rng):
    m = MtlModel.initialise(_arch(), seed=0)
    x = rng.normal(size=(6, 7, 3))
    y = np.array([0, 1] * 3)
    cur = TaggedLabels(y, CURRENT, "A")
    pri = TaggedLabels(y, PRIOR, "B")
    cfg = TrainConfig(epochs=1)
    with pytest.raises(LeakageError):
        mtl_fit(m, (x, SealedLabels(y, "A")), (x, pri), cfg)
    with pytest.raises(LeakageError):
        mtl_fit(m, (x, TaggedLabels(y, PRIOR, "A")), (x, pri), cfg)
    with pytest.raises(LeakageError):
        mtl_fit(m, (x, cur), (x, TaggedLabels(y, CURRENT, "B")), cfg)
    with pytest.raises(LeakageError):
        mtl_fit(m, (x, cur), (x, pri), cfg, eval_cohorts=("A",))
    with pytest.raises(LeakageError):
        mtl_fit(m, (x, y), (x, pri), cfg)
    fitted, _ = mtl_fit(m, (x, cur), (x, pri), cfg)
    assert fitted.lineage.current == {"A"} and fitted.lineage.prior == {"B"}


# persistence


def test_persist_round_trip(tmp_path, rng):
    models = [LogisticModel(np.array([0.5, -1.0]), 0.2, LrConfig()), zero_rule([LOW, LOW, HIGH]),
              one_rule_svm_fit([2.0, 3.0, 3.5, 3.9], [LOW, LOW, HIGH, HIGH]),
              Cnn1dModel.initialise(_arch(), 1), MtlModel.initialise(_arch(), 2)]
    x = rng.normal(size=(3, 7, 3))
    for i, m in enumerate(models):
        save_model(m, tmp_path / f"{i}.json")
        back = load_model(tmp_path / f"{i}.json")
        assert type(back) is type(m)
        assert model_to_dict(back) == model_to_dict(m)
    np.testing.assert_array_equal(cnn_forward(back.task_model(), x), cnn_forward(models[-1].task_model(), x))


def test_persist_rejects_unknown_version():
    d = model_to_dict(zero_rule([HIGH]))
    d["format_version"] = 99
    with pytest.raises(DataError):
        model_from_dict(d)
