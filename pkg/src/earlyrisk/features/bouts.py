"""Bout grouping: maximal runs of one state over consecutive samples."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import _kernels


@dataclass(frozen=True)
class Bout:
    kind: str
    start: int  # minute of first sample
    end: int  # one past the last sample minute
    value: float = np.nan  # e.g. step total

    def __post_init__(self):
        if self.end <= self.start:
            raise ValueError("bout end must follow start")

    @property
    def duration(self) -> int:
        return self.end - self.start


class BoutTable:
    """Columnar bouts: state code, first/last sample index, span, value sum."""

    __slots__ = ("code", "i0", "n", "start", "end", "value")

    def __init__(self, t, codes, values=None, max_gap=1):
        t = np.asarray(t, dtype=np.int64)
        codes = np.asarray(codes, dtype=np.int64)
        i0, n = _kernels.runs(t, codes, max_gap)
        self.i0, self.n = i0, n
        self.code = codes[i0] if len(i0) else np.empty(0, np.int64)
        last = i0 + n - 1
        self.start = t[i0] if len(i0) else np.empty(0, np.int64)
        self.end = t[last] + 1 if len(i0) else np.empty(0, np.int64)
        if values is not None and len(i0):
            cs = np.concatenate([[0.0], np.cumsum(np.asarray(values, dtype=float))])
            self.value = cs[i0 + n] - cs[i0]
        else:
            self.value = np.full(len(i0), np.nan)

    def __len__(self):
        return len(self.i0)

    @property
    def duration(self):
        return self.end - self.start

    def of(self, code):
        return np.flatnonzero(self.code == code)

    def as_bouts(self, names):
        return [Bout(names[int(c)], int(s), int(e), float(v))
                for c, s, e, v in zip(self.code, self.start, self.end, self.value)]


def step_bouts(t, steps, threshold=12, max_gap=1):
    """Active (steps >= threshold) and sedentary bouts of minute step counts."""
    steps = np.asarray(steps, dtype=float)
    return BoutTable(t, (steps >= threshold).astype(np.int64), steps, max_gap)


def nanstats(x, prefix):
    """sum/mean/std/max/min of ``x`` with the missing conventions used everywhere.

    Empty input gives sum 0 and NaN for the rest; std needs two values.
    """
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return {f"{prefix}_sum": 0.0, f"{prefix}_mean": np.nan, f"{prefix}_std": np.nan,
                f"{prefix}_max": np.nan, f"{prefix}_min": np.nan}
    return {
        f"{prefix}_sum": float(x.sum()),
        f"{prefix}_mean": float(x.mean()),
        f"{prefix}_std": float(x.std(ddof=1)) if x.size >= 2 else np.nan,
        f"{prefix}_max": float(x.max()),
        f"{prefix}_min": float(x.min()),
    }
