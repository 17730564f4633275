"""From-scratch learners: logistic regression, 0R/1R baselines, 1-D CNN and its two-task extension."""
from .baselines import OneRuleSvm, ZeroRule, one_rule_svm_fit, zero_rule
from .cnn import Cnn1dModel, CnnArch, LossHistory, TrainConfig, cnn_fit, cnn_predict_proba
from .gradcheck import cnn_gradient_check, gradient_check, hinge_gradient_check, lr_gradient_check
from .logistic import LogisticModel, LrConfig, lr_fit, lr_predict, lr_predict_proba
from .mtl import MtlModel, mtl_fit
from .persist import load_model, save_model

__all__ = [
    "OneRuleSvm", "ZeroRule", "one_rule_svm_fit", "zero_rule",
    "Cnn1dModel", "CnnArch", "LossHistory", "TrainConfig", "cnn_fit", "cnn_predict_proba",
    "cnn_gradient_check", "gradient_check", "hinge_gradient_check", "lr_gradient_check",
    "LogisticModel", "LrConfig", "lr_fit", "lr_predict", "lr_predict_proba",
    "MtlModel", "mtl_fit", "load_model", "save_model",
]
