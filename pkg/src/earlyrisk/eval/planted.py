"""Check a feature ranking against the generator's planted behaviour effects.

A planted family counts as recovered when one of its measuring features
(weekly mean aggregate) is in the top of the ranking and its impact sign
matches the planted direction.
"""
from __future__ import annotations

import pandas as pd

# family -> base feature names that increase with the behaviour
FAMILY_FEATURES = {
    "class_attendance": ("cls_attendance_rate", "cls_num_attended", "cls_pct_time_in_class"),
    "weekday_phone_use": ("scr_int_count", "scr_int_sum", "scr_unl_count", "scr_unl_sum", "scr_unlocks_per_min"),
    # restless bouts interrupt sleep, so they also split the asleep state
    "restless_sleep": ("slp_restless_bouts", "slp_restless_total", "slp_asleep_bouts"),
    "weekday_exercise": ("map_exercise_bouts", "map_exercise_bouts10", "map_exercise_bouts30",
                         "map_exercise_max_bout", "map_exercise_time"),
    "study_duration": ("hl_study_duration", "map_study_bouts", "map_study_bouts10", "map_study_bouts30",
                       "map_study_max_bout", "map_study_time"),
}
LEVEL_AGG = "mean"
_SIGN = {"+": 1, "-": -1, "0": 0}


def feature_family(name: str):
    """Planted family measured by a weekly feature name, or None."""
    parts = name.split("__")
    if len(parts) != 3 or parts[2] != LEVEL_AGG:
        return None
    for fam, bases in FAMILY_FEATURES.items():
        if parts[0] in bases:
            return fam
    return None


def planted_recovery(ranking: pd.DataFrame, effects, top=10) -> dict:
    """``{family: {"recovered", "feature", "rank"}}`` for each planted effect.

    ``ranking`` is the output of :func:`importance_ranking`; ``effects`` is an
    iterable of objects (or dicts) with ``feature_family`` and ``direction``.
    """
    head = ranking.sort_values("rank").head(top)
    out = {}
    for e in effects:
        fam = e["feature_family"] if isinstance(e, dict) else e.feature_family
        sign = e["direction"] if isinstance(e, dict) else e.direction
        hit = None
        for row in head.itertuples():
            if feature_family(row.feature) == fam and _SIGN[str(row.impact)] == int(sign):
                hit = row
                break
        out[fam] = {"recovered": hit is not None,
                    "feature": None if hit is None else hit.feature,
                    "rank": None if hit is None else int(hit.rank)}
    return out
