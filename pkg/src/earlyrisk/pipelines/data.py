"""Model-ready views of one cohort: weekly table, daily tensor and labels."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from ..domain import DailyFeatureMatrix, LabelSet, ProtectedTraits, labels_from_gpa, one_hot
from ..errors import DataError
from ..features.change import week_tensor, weekly_features
from ..seal import CURRENT, PRIOR, SealedLabels, TaggedLabels

SR_CATEGORICAL = ("sr_service_provider",)


@dataclass
class CohortData:
    cohort_id: str
    daily: DailyFeatureMatrix
    self_report: pd.DataFrame | None
    gpa_prior: np.ndarray  # NaN where unknown
    traits: ProtectedTraits | None = None
    gpa_current: np.ndarray | None = None  # None when sealed
    sealed: SealedLabels | None = None

    @property
    def participants(self) -> list:
        return list(self.daily.participants)

    @property
    def is_sealed(self):
        return self.sealed is not None

    def current_labels(self) -> TaggedLabels:
        if self.gpa_current is None:
            raise DataError(f"current labels of cohort {self.cohort_id!r} are not available")
        return TaggedLabels(labels_from_gpa(self.gpa_current), CURRENT, self.cohort_id)

    def prior_labels(self) -> TaggedLabels:
        return TaggedLabels(labels_from_gpa(self.gpa_prior), PRIOR, self.cohort_id)

    @property
    def has_prior(self):
        return bool(np.any(~np.isnan(self.gpa_prior)))

    def subset(self, participants) -> "CohortData":
        pos = {p: i for i, p in enumerate(self.participants)}
        idx = np.array([pos[p] for p in participants], dtype=int)
        sr = None if self.self_report is None else self.self_report.iloc[idx].reset_index(drop=True)
        tr = None
        if self.traits is not None:
            tr = ProtectedTraits(tuple(participants), {k: np.asarray(v)[idx] for k, v in self.traits.values.items()})
        gc = None if self.gpa_current is None else self.gpa_current[idx]
        if self.sealed is not None:
            raise DataError("cannot subset a sealed cohort")
        return CohortData(self.cohort_id, self.daily.subset(list(participants)), sr, self.gpa_prior[idx], tr, gc)


def make_cohort_data(cohort_id, daily: DailyFeatureMatrix, labels: LabelSet, self_report=None,
                     traits=None, seal=False) -> CohortData:
    """Align labels and self-report rows with ``daily.participants``.

    With ``seal=True`` the current-term labels are wrapped in
    :class:`SealedLabels` and removed from the plain fields.
    """
    pos = {p: i for i, p in enumerate(labels.participants)}
    missing = [p for p in daily.participants if p not in pos]
    if missing:
        raise DataError(f"no labels for participants {missing[:5]}")
    idx = np.array([pos[p] for p in daily.participants], dtype=int)
    gc = np.asarray(labels.gpa_current, dtype=float)[idx]
    gp = np.asarray(labels.gpa_prior, dtype=float)[idx]
    sr = None
    if self_report is not None:
        sr = self_report.set_index("participant_id").reindex(daily.participants)
        sr.index.name = "participant_id"
        sr = sr.reset_index()
    tr = None
    if traits is not None:
        tpos = {p: i for i, p in enumerate(traits.participants)}
        tidx = np.array([tpos[p] for p in daily.participants], dtype=int)
        tr = ProtectedTraits(tuple(daily.participants), {k: np.asarray(v)[tidx] for k, v in traits.values.items()})
    if seal:
        sealed = SealedLabels(labels_from_gpa(gc), cohort_id)
        return CohortData(cohort_id, daily, sr, gp, tr, None, sealed)
    if np.isnan(gc).any():
        raise DataError(f"cohort {cohort_id!r} lacks current GPA for some participants")
    return CohortData(cohort_id, daily, sr, gp, tr, gc)


def self_report_table(sr: pd.DataFrame | None, categories=None):
    """Numeric self-report columns plus one-hot categoricals; ``(names, values)``."""
    if sr is None:
        return [], np.zeros((0, 0))
    names, cols = [], []
    for c in sr.columns:
        if c == "participant_id":
            continue
        if c in SR_CATEGORICAL:
            cats = None if categories is None else categories.get(c)
            for k, v in one_hot(sr[c].to_numpy(dtype=object), cats).items():
                names.append(f"{c}_{k}")
                cols.append(v)
        else:
            names.append(c)
            cols.append(pd.to_numeric(sr[c], errors="coerce").to_numpy(dtype=float))
    return names, np.column_stack(cols) if cols else np.zeros((len(sr), 0))


def weekly_table(data: CohortData, week_start=None, include_self_report=True):
    """``(names, X[P, F])`` weekly features (+ self-report) for the LR approach.

    Columns come back sorted by name, the canonical order used downstream.
    """
    names, x = weekly_features(data.daily, week_start)
    if include_self_report and data.self_report is not None:
        sn, sx = self_report_table(data.self_report)
        names = names + sn
        x = np.hstack([x, sx])
    order = np.argsort(np.asarray(names, dtype=object), kind="stable")
    return [names[i] for i in order], x[:, order]


def daily_tensor(data: CohortData, week_start=None, features=None):
    """``(names, X[P, 7, F])`` Monday-first daily tensor for the CNN approaches."""
    m = data.daily if features is None else data.daily.select(features)
    return list(m.features), week_tensor(m, week_start)


def cohort_to_data(cohort, cohort_id=None, seal=False, extract_config=None) -> CohortData:
    """Extract daily features from a generated/read :class:`~earlyrisk.synth.Cohort`."""
    from ..features.extract import extract_cohort
    daily = extract_cohort(cohort.streams, cohort.place_map, cohort.schedules, cohort.days, extract_config)
    cid = cohort_id or cohort.config.id_prefix
    return make_cohort_data(cid, daily, cohort.labels, cohort.self_report, cohort.traits, seal=seal)
