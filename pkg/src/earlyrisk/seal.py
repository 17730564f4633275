"""Label containers that keep evaluation-cohort outcomes away from trainers.

A :class:`TaggedLabels` records which cohort and term its labels belong to,
so trainers can refuse anything that is not allowed in. Current-term labels
of an evaluation cohort travel as :class:`SealedLabels`; only the evaluator
can open them, and every model carries a :class:`Lineage` listing the
cohorts whose current labels it was fitted on.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import LeakageError, LineageError

CURRENT = "current"
PRIOR = "prior"


@dataclass(frozen=True)
class TaggedLabels:
    values: np.ndarray  # binary labels, -1 for unknown
    kind: str  # CURRENT or PRIOR
    cohort: str

    def __post_init__(self):
        if self.kind not in (CURRENT, PRIOR):
            raise ValueError(f"unknown label kind {self.kind!r}")
        v = np.asarray(self.values, dtype=np.int64)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.values)


class SealedLabels:
    """Opaque holder of one cohort's current-term labels.

    The payload is reachable only through :meth:`unseal` with the evaluator's
    key. Each access is recorded in ``access_log``.
    """

    __slots__ = ("_labels", "cohort", "access_log")

    def __init__(self, values, cohort: str):
        self._labels = TaggedLabels(values, CURRENT, cohort)
        self.cohort = cohort
        self.access_log = []

    def __len__(self):
        return len(self._labels)

    def __array__(self, *args, **kwargs):
        raise LeakageError(f"sealed labels of cohort {self.cohort!r} cannot be converted to an array")

    def __iter__(self):
        raise LeakageError(f"sealed labels of cohort {self.cohort!r} cannot be iterated")

    def __getattr__(self, name):
        if name in ("values", "kind"):
            raise LeakageError(f"sealed labels of cohort {self.cohort!r} are not readable")
        raise AttributeError(name)

    def unseal(self, key, purpose="evaluation") -> TaggedLabels:
        if key is not EVALUATOR_KEY:
            raise LeakageError("only the evaluator may unseal labels")
        self.access_log.append(purpose)
        return self._labels

    @property
    def opened(self) -> bool:
        return bool(self.access_log)


class _EvaluatorKey:
    __slots__ = ()

    def __repr__(self):
        return "<evaluator key>"


EVALUATOR_KEY = _EvaluatorKey()


@dataclass(frozen=True)
class Lineage:
    """Cohorts whose current labels (and prior labels) fed a model."""

    current: frozenset = field(default_factory=frozenset)
    prior: frozenset = field(default_factory=frozenset)

    def add(self, labels: TaggedLabels) -> "Lineage":
        if labels.kind == CURRENT:
            return Lineage(self.current | {labels.cohort}, self.prior)
        return Lineage(self.current, self.prior | {labels.cohort})

    def check_can_score(self, cohort: str):
        if cohort in self.current:
            raise LineageError(f"model was trained on current labels of cohort {cohort!r}")

    def to_dict(self):
        return {"current": sorted(self.current), "prior": sorted(self.prior)}

    @classmethod
    def from_dict(cls, d):
        return cls(frozenset(d.get("current", ())), frozenset(d.get("prior", ())))


def require_trainable(labels, allowed_kinds=(CURRENT, PRIOR), forbidden_current=()):
    """Return label values for training, refusing sealed or forbidden labels."""
    if isinstance(labels, SealedLabels):
        raise LeakageError(f"sealed labels of cohort {labels.cohort!r} passed to a trainer")
    if not isinstance(labels, TaggedLabels):
        return np.asarray(labels)
    if labels.kind not in allowed_kinds:
        raise LeakageError(f"{labels.kind} labels of cohort {labels.cohort!r} are not allowed here")
    if labels.kind == CURRENT and labels.cohort in forbidden_current:
        raise LeakageError(f"current labels of evaluation cohort {labels.cohort!r} reached training")
    return labels.values
