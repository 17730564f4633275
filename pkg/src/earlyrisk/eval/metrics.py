"""Classification metrics with High as the positive class and AUC on P(Low)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from ..domain import HIGH, LOW
from ..errors import DomainError

METRIC_NAMES = ("accuracy", "precision", "recall", "f1", "auc", "kappa", "balanced_accuracy")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @classmethod
    def from_labels(cls, y_true, y_pred, positive=HIGH):
        t = np.asarray(y_true) == positive
        p = np.asarray(y_pred) == positive
        return cls(int(np.sum(t & p)), int(np.sum(~t & p)), int(np.sum(~t & ~p)), int(np.sum(t & ~p)))

    @property
    def n(self):
        return self.tp + self.fp + self.tn + self.fn


def _div(a, b):
    return a / b if b else np.nan


def metrics_from_counts(c: ConfusionCounts) -> dict:
    n = c.n
    acc = _div(c.tp + c.tn, n)
    prec = _div(c.tp, c.tp + c.fp)
    rec = _div(c.tp, c.tp + c.fn)
    spec = _div(c.tn, c.tn + c.fp)
    f1 = _div(2 * c.tp, 2 * c.tp + c.fp + c.fn)
    po = acc
    pe = _div((c.tp + c.fp) * (c.tp + c.fn) + (c.tn + c.fn) * (c.tn + c.fp), n * n)
    kappa = _div(po - pe, 1.0 - pe) if pe != 1.0 else np.nan
    rates = [r for r in (rec, spec) if not np.isnan(r)]
    bal = float(np.mean(rates)) if rates else np.nan
    return {"accuracy": acc, "precision": prec, "recall": rec, "f1": f1, "kappa": kappa, "balanced_accuracy": bal}


def auc_score(is_positive, score):
    """Area under the ROC curve by the rank-sum statistic; ties get half credit."""
    pos = np.asarray(is_positive, dtype=bool)
    s = np.asarray(score, dtype=float)
    n1, n0 = int(pos.sum()), int((~pos).sum())
    if n1 == 0 or n0 == 0:
        return np.nan
    ranks = rankdata(s)  # average ranks resolve ties
    return float((ranks[pos].sum() - n1 * (n1 + 1) / 2.0) / (n1 * n0))


def classification_metrics(y_true, y_pred, prob_low=None) -> dict:
    """Accuracy, precision, recall, F1, AUC, Cohen's kappa and balanced accuracy.

    Precision/recall/F1 treat High as positive. AUC ranks ``prob_low``
    against the Low class. Undefined values (zero denominators, single-class
    truth for AUC) come back as NaN.
    """
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise DomainError("y_true and y_pred must be vectors of equal length")
    if not np.all(np.isin(y_true, (HIGH, LOW))) or not np.all(np.isin(y_pred, (HIGH, LOW))):
        raise DomainError("labels must be HIGH/LOW")
    out = metrics_from_counts(ConfusionCounts.from_labels(y_true, y_pred))
    if prob_low is None:
        out["auc"] = np.nan
    else:
        prob_low = np.asarray(prob_low, dtype=float)
        if prob_low.shape != y_true.shape:
            raise DomainError("prob_low length differs from labels")
        out["auc"] = auc_score(y_true == LOW, prob_low)
    return {k: (float(out[k]) if not np.isnan(out[k]) else np.nan) for k in METRIC_NAMES}
