"""Accuracy by prior-to-current performance transition."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..domain import HIGH, LOW

CATEGORIES = ("stay_high", "stay_low", "change_to_high", "change_to_low")
_KEY = {(HIGH, HIGH): "stay_high", (LOW, LOW): "stay_low", (LOW, HIGH): "change_to_high", (HIGH, LOW): "change_to_low"}


@dataclass(frozen=True)
class TransitionBreakdown:
    counts: dict  # category -> participants
    correct: dict  # category -> correctly predicted participants
    unclassified: int

    def accuracy(self, category):
        n = self.counts[category]
        return self.correct[category] / n if n else np.nan

    @property
    def accuracies(self):
        return {c: self.accuracy(c) for c in CATEGORIES}

    @property
    def total(self):
        return sum(self.counts.values())

    def to_dict(self):
        return {c: {"n": self.counts[c], "correct": self.correct[c],
                    "accuracy": None if self.counts[c] == 0 else self.accuracy(c)} for c in CATEGORIES} | {
            "unclassified": self.unclassified}


def transition_breakdown(prior, current, pred) -> TransitionBreakdown:
    """Split participants by (prior, current) label; unknown labels (-1) are unclassified."""
    prior = np.asarray(prior)
    current = np.asarray(current)
    pred = np.asarray(pred)
    if not (prior.shape == current.shape == pred.shape):
        raise ValueError("prior, current and predicted labels must be aligned")
    counts = dict.fromkeys(CATEGORIES, 0)
    correct = dict.fromkeys(CATEGORIES, 0)
    unclassified = 0
    for p, c, y in zip(prior.tolist(), current.tolist(), pred.tolist()):
        key = _KEY.get((p, c))
        if key is None:
            unclassified += 1
            continue
        counts[key] += 1
        correct[key] += int(y == c)
    return TransitionBreakdown(counts, correct, unclassified)
