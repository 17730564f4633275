"""High-level academic behaviours fused from location, activity and schedule."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..domain import MINUTES_PER_DAY
from .bouts import BoutTable

STUDY_MIN_DWELL = 20
PARTY_MIN_DWELL = 30
ATTEND_THRESHOLD = 0.5


@dataclass(frozen=True, order=True)
class ClassBlock:
    weekday: int  # 0 = Monday
    start: int  # minute of day
    end: int
    building_id: str

    @property
    def duration(self):
        return self.end - self.start


def weekday_of(day: int) -> int:
    """Monday = 0 for a day number counted from 1970-01-01 (a Thursday)."""
    return (int(day) + 3) % 7


def class_attendance(loc_t, loc_building, block: ClassBlock, day: int):
    """(fraction of class minutes spent in the class building, attended?).

    Attended only when the fraction is strictly above one half.
    """
    lo = day * MINUTES_PER_DAY + block.start
    hi = day * MINUTES_PER_DAY + block.end
    a, b = np.searchsorted(loc_t, [lo, hi], side="left")
    inside = float(np.sum(loc_building[a:b] == block.building_id))
    pct = inside / block.duration
    return pct, pct > ATTEND_THRESHOLD


def qualifying_bout_mask(t, labels, target, min_span, max_gap=5):
    """Per-sample flag: sample lies in a ``target``-labelled bout spanning >= ``min_span`` minutes."""
    codes = (np.asarray(labels) == target).astype(np.int64)
    bt = BoutTable(t, codes, max_gap=max_gap)
    flag = np.zeros(len(codes), dtype=bool)
    for j in bt.of(1):
        if bt.duration[j] >= min_span:
            flag[bt.i0[j]:bt.i0[j] + bt.n[j]] = True
    return flag


def party_mask(t, labels, frat_resident: bool):
    """Samples counted as partying: frat bouts of >= 30 min inside 18:00-12:00(+1)."""
    if frat_resident:
        return np.zeros(len(t), dtype=bool)
    mod = np.asarray(t) % MINUTES_PER_DAY
    in_hours = (mod >= 18 * 60) | (mod < 12 * 60)
    return qualifying_bout_mask(t, labels, "frat", PARTY_MIN_DWELL) & in_hours


def class_features(loc_t, loc_building, schedule, day, lo_mod, hi_mod):
    """Attendance features for classes starting inside [lo_mod, hi_mod) of ``day``."""
    wd = weekday_of(day)
    blocks = [c for c in schedule if c.weekday == wd and lo_mod <= c.start < hi_mod]
    if not blocks:
        return {"cls_pct_time_in_class": np.nan, "cls_num_attended": np.nan, "cls_attendance_rate": np.nan}
    inside = total = attended = 0.0
    for c in blocks:
        pct, ok = class_attendance(loc_t, loc_building, c, day)
        inside += pct * c.duration
        total += c.duration
        attended += ok
    return {"cls_pct_time_in_class": inside / total, "cls_num_attended": attended,
            "cls_attendance_rate": attended / len(blocks)}
