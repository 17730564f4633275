"""Seeded synthetic cohorts: sensor streams, schedules, self-reports, GPA labels, traits.

Each participant has a latent risk score ``z ~ N(0, 1)``; the Low performers
are exactly the ``round(n * low_fraction)`` highest scores. Every behaviour
family has a participant propensity ``u``. For a planted family
``u = direction * strength * (-z) + e`` with ``e ~ N(0, 1)``, so a positive
direction means more of the behaviour goes with a higher GPA. Other
families are pure noise. A minute-level itinerary is then painted from the
propensities and rendered into the nine sensor streams.
"""
from __future__ import annotations

import dataclasses
import datetime as dt
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from . import _rng
from ._io import atomic_path
from .domain import (
    MINUTES_PER_DAY,
    SENSORS,
    TRAITS,
    LabelSet,
    ProtectedTraits,
    Stream,
    day_number,
    read_labels_csv,
    read_streams_csv,
    write_labels_csv,
    write_streams_csv,
)
from .errors import ConfigError, DataError
from .features.highlevel import ClassBlock, weekday_of
from .features.places import Place, PlaceMap, rectangle

log = logging.getLogger(__name__)

FAMILIES = {
    "class_attendance": "probability of attending each scheduled class",
    "weekday_phone_use": "screen session rate and length on weekdays",
    "weekend_phone_use": "screen session rate and length on weekends",
    "restless_sleep": "rate of restless bouts while asleep",
    "weekday_exercise": "probability of a gym visit on weekdays",
    "study_duration": "length of study sessions at study buildings",
    "party": "probability of a frat party on Friday/Saturday night",
    "sleep_duration": "hours in bed",
    "bedtime": "lateness of going to bed",
    "social": "number of other people's devices around",
    "calls": "phone call rate",
    "greens": "probability of visiting a green space",
}

DEFAULT_PREVALENCES = {"urm": 0.17, "firstgen": 0.30, "gender_min": 0.65, "sexual_min": 0.11}
SR_PROVIDERS = ("att", "other", "tmobile", "verizon")

LAT0, LON0 = 47.6550, -122.3050
M_PER_DEG = 111_195.0
GPS_NOISE_M = 3.0
WALK_M_PER_MIN = 75.0
DRIVE_M_PER_MIN = 400.0
SCAN_EVERY = 3  # Bluetooth / WiFi scan period in minutes
BATTERY_EVERY = 15


@dataclass(frozen=True)
class PlantedEffect:
    feature_family: str
    direction: int  # +1: more of the behaviour goes with higher GPA
    strength: float = 1.0

    def __post_init__(self):
        if self.feature_family not in FAMILIES:
            raise ConfigError(f"unknown behaviour family {self.feature_family!r}; choose from {sorted(FAMILIES)}")
        d = {"+": 1, "-": -1}.get(self.direction, self.direction)
        if d not in (1, -1):
            raise ConfigError(f"direction must be +1/-1, got {self.direction!r}")
        object.__setattr__(self, "direction", int(d))
        if not self.strength >= 0:
            raise ConfigError("strength must be non-negative")


DEFAULT_EFFECTS = (
    PlantedEffect("class_attendance", +1, 1.0),
    PlantedEffect("weekday_phone_use", -1, 1.0),
    PlantedEffect("restless_sleep", -1, 1.0),
    PlantedEffect("weekday_exercise", +1, 1.0),
    PlantedEffect("study_duration", +1, 1.0),
)


@dataclass(frozen=True)
class CohortConfig:
    seed: int = 1
    n_participants: int = 188
    n_days: int = 7
    low_performer_fraction: float = 0.23
    trait_prevalences: dict = field(default_factory=lambda: dict(DEFAULT_PREVALENCES))
    planted_effects: tuple = DEFAULT_EFFECTS
    start_date: str = "2018-03-26"
    persistence: float = 0.6  # correlation of prior and current latent risk
    missingness: dict = field(default_factory=dict)  # sensor -> per-event drop rate
    outage_rate: float = 0.02  # chance a sensor records nothing on a given day
    n_self_report: int = 12
    id_prefix: str = "P"
    family_shift: dict = field(default_factory=dict)  # family -> propensity mean shift (SD units)

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not (0 < self.low_performer_fraction < 1):
            raise ConfigError("low_performer_fraction must be in (0, 1)")
        if self.n_participants < 2:
            raise ConfigError("n_participants must be at least 2")
        if self.n_days < 7:
            raise ConfigError("n_days must be at least 7")
        for k, v in self.trait_prevalences.items():
            if k not in TRAITS:
                raise ConfigError(f"unknown trait {k!r}")
            if not (0 < v < 1):
                raise ConfigError(f"prevalence of {k} must be in (0, 1)")
        if not (0 <= self.persistence <= 1):
            raise ConfigError("persistence must be in [0, 1]")
        for s, r in self.missingness.items():
            if s not in SENSORS or not (0 <= r <= 1):
                raise ConfigError(f"bad missingness entry {s}={r}")
        if not (0 <= self.outage_rate <= 1):
            raise ConfigError("outage_rate must be in [0, 1]")
        for f in self.family_shift:
            if f not in FAMILIES:
                raise ConfigError(f"unknown behaviour family {f!r}")
        try:
            dt.date.fromisoformat(self.start_date)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad start_date {self.start_date!r}") from exc
        effects = tuple(e if isinstance(e, PlantedEffect) else PlantedEffect(**e) for e in self.planted_effects)
        object.__setattr__(self, "planted_effects", effects)

    @property
    def start_day(self) -> int:
        return day_number(dt.date.fromisoformat(self.start_date))

    @property
    def days(self) -> list:
        return list(range(self.start_day, self.start_day + self.n_days))

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["planted_effects"] = [dataclasses.asdict(e) for e in self.planted_effects]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CohortConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown cohort config keys {sorted(extra)}")
        d = dict(d)
        if "planted_effects" in d:
            d["planted_effects"] = tuple(PlantedEffect(**e) if isinstance(e, dict) else e for e in d["planted_effects"])
        if "trait_prevalences" in d:
            d["trait_prevalences"] = {**DEFAULT_PREVALENCES, **d["trait_prevalences"]}
        return cls(**d)


@dataclass
class GroundTruth:
    latent: dict  # participant -> z
    latent_prior: dict
    threshold: float
    effects: list  # applied PlantedEffect dicts
    propensity: dict  # family -> {participant: u}
    realized: dict  # family -> {participant: realised weekly behaviour}
    family_shift: dict

    def to_json(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class Cohort:
    config: CohortConfig
    participants: tuple
    streams: dict  # participant -> {sensor: Stream}
    schedules: dict  # participant -> [ClassBlock]
    self_report: pd.DataFrame
    labels: LabelSet
    traits: ProtectedTraits
    ground_truth: GroundTruth | None
    place_map: PlaceMap

    @property
    def days(self) -> list:
        return self.config.days


# ---------------------------------------------------------------------------
# campus


def _to_latlon(x_m, y_m):
    lat = LAT0 + y_m / M_PER_DEG
    lon = LON0 + x_m / (M_PER_DEG * math.cos(math.radians(LAT0)))
    return lat, lon


_LAYOUT = (
    [(f"S{i + 1}", "study", c, r) for i, (c, r) in enumerate([(0, 0), (1, 0), (2, 0), (0, 1), (1, 1), (2, 1)])]
    + [(f"D{i + 1}", "food", c, r) for i, (c, r) in enumerate([(3, 0), (3, 1), (1, 2)])]
    + [(f"G{i + 1}", "exercise", c, r) for i, (c, r) in enumerate([(4, 0), (4, 2)])]
    + [(f"P{i + 1}", "greens", c, r) for i, (c, r) in enumerate([(0, 2), (2, 2)])]
    + [(f"L{i + 1}", "living", c, r) for i, (c, r) in
       enumerate([(0, 3), (1, 3), (2, 3), (3, 3), (0, 4), (1, 4), (2, 4), (3, 4)])]
    + [(f"F{i + 1}", "frat", c, r) for i, (c, r) in enumerate([(4, 3), (4, 4), (3, 2)])]
)
_OFFSITE = {"X1": (-6, 2), "X2": (8, 1), "X3": (2, -6)}
SPACING_M = 250.0
HALF_M = {"greens": 60.0}


def campus_map() -> PlaceMap:
    """The fixed synthetic campus: a grid of labelled rectangular buildings."""
    places = []
    for pid, label, c, r in _LAYOUT:
        lat, lon = _to_latlon(c * SPACING_M, r * SPACING_M)
        h = HALF_M.get(label, 40.0)
        places.append(Place(pid, label, rectangle(lat, lon, h, h)))
    return PlaceMap(places)


def _building_xy():
    out = {pid: (c * SPACING_M, r * SPACING_M, label) for pid, label, c, r in _LAYOUT}
    for k, (c, r) in _OFFSITE.items():
        out[k] = (c * SPACING_M, r * SPACING_M, "outside")
    return out


def _mac(*parts) -> str:
    h = _rng.substream(0, "mac", *parts).integers(0, 256, 6)
    return ":".join(f"{b:02x}" for b in h)


_POOL_SIZE = 40
_STREET_POOL = tuple(_mac("street", i) for i in range(200))
_BUILDING_POOL = {pid: tuple(_mac(pid, i) for i in range(_POOL_SIZE)) for pid, *_ in _LAYOUT}
_BUILDING_APS = {pid: tuple(_mac("ap", pid, i) for i in range(3)) for pid, *_ in _LAYOUT}
BT_RATE = {"study": 4.0, "food": 5.0, "exercise": 3.0, "greens": 1.5, "living": 1.5, "frat": 6.0,
           "outside": 0.6, "class": 7.0, "party": 10.0}


# ---------------------------------------------------------------------------
# latent structure


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _latent_labels(n, low_frac, rng):
    z = rng.standard_normal(n)
    k = int(round(n * low_frac))
    order = np.sort(z)[::-1]
    if k <= 0:
        thr = order[0] + 1.0
    elif k >= n:
        thr = order[-1] - 1.0
    else:
        thr = 0.5 * (order[k - 1] + order[k])
    return z, thr


def _gpa_from_latent(z, thr):
    g = np.clip(3.2 - 0.45 * (z - thr), 0.0, 4.0).round(2)
    low = z > thr
    g = np.where(low, np.minimum(g, 3.20), np.maximum(g, 3.21))
    return g


def _exact_traits(n, prevalences, rng):
    out = {}
    for t in TRAITS:
        k = int(round(n * prevalences.get(t, DEFAULT_PREVALENCES[t])))
        v = np.zeros(n, dtype=bool)
        v[rng.choice(n, size=k, replace=False)] = True
        out[t] = v
    return out


# ---------------------------------------------------------------------------
# per-participant itinerary


@dataclass
class _Spot:
    x: float
    y: float
    label: str  # place label or "outside"
    building: str
    kind: str  # label, or "class" / "party" for BT crowding


class _Painter:
    """Minute-level plan over [noon of day -1, end of last day)."""

    def __init__(self, n_days):
        self.n = (n_days + 1) * MINUTES_PER_DAY
        self.spot = np.zeros(self.n, dtype=np.int64)  # 0 = home
        self.sleep = np.zeros(self.n, dtype=bool)
        self.exercise = np.zeros(self.n, dtype=bool)
        self.in_class = np.zeros(self.n, dtype=bool)
        self.spots: list[_Spot] = []

    def add_spot(self, s: _Spot) -> int:
        self.spots.append(s)
        return len(self.spots) - 1

    def paint(self, lo, hi, s, flag=None):
        lo, hi = max(0, int(lo)), min(self.n, int(hi))
        if hi <= lo:
            return
        self.spot[lo:hi] = s
        if flag is not None:
            flag[lo:hi] = True


def _participant(cfg: CohortConfig, i: int, pid: str, u: dict, campus_xy: dict):
    rng = _rng.substream(cfg.seed, "gen", "participant", i)
    n_days = cfg.n_days
    p = _Painter(n_days)

    # home, courses and favourite places
    living = [b for b, (_, _, lab) in campus_xy.items() if lab == "living"]
    frats = [b for b, (_, _, lab) in campus_xy.items() if lab == "frat"]
    home_b = str(rng.choice(frats)) if rng.random() < 0.05 else str(rng.choice(living))
    hx, hy, hlab = campus_xy[home_b]
    p.add_spot(_Spot(hx + rng.uniform(-20, 20), hy + rng.uniform(-20, 20), hlab, home_b, hlab))

    def fav(label, kind=None):
        b = str(rng.choice([k for k, (_, _, lab) in campus_xy.items() if lab == label]))
        x, y, lab = campus_xy[b]
        return p.add_spot(_Spot(x + rng.uniform(-15, 15), y + rng.uniform(-15, 15), lab, b, kind or lab))

    food = fav("food")
    library = fav("study")
    gym = fav("exercise")
    green = fav("greens")
    frat = fav("frat", "party")
    ox = str(rng.choice(sorted(_OFFSITE)))
    offsite = p.add_spot(_Spot(campus_xy[ox][0], campus_xy[ox][1], "outside", "", "outside"))

    n_courses = int(rng.integers(2, 5))
    slots = {"MWF": list(range(8 * 60 + 30, 16 * 60 + 31, 60)), "TTh": list(range(8 * 60 + 30, 16 * 60 + 31, 90))}
    courses = []
    for _ in range(n_courses):
        pattern = "MWF" if rng.random() < 0.55 else "TTh"
        free = slots[pattern]
        if not free:
            pattern = "TTh" if pattern == "MWF" else "MWF"
            free = slots[pattern]
        start = int(free.pop(int(rng.integers(len(free)))))
        dur = 50 if pattern == "MWF" else 80
        spot = fav("study", "class")
        for wd in ((0, 2, 4) if pattern == "MWF" else (1, 3)):
            courses.append((wd, start, start + dur, spot))
    schedule = sorted(ClassBlock(wd, s, e, p.spots[sp].building) for wd, s, e, sp in courses)

    # daily plan
    base0 = MINUTES_PER_DAY  # day 0 starts one day into the painter
    p_att = _sigmoid(1.6 + 1.3 * u["class_attendance"])
    p_gym_wd = _sigmoid(-0.6 + 1.3 * u["weekday_exercise"])
    p_gym_we = _sigmoid(-1.0 + 0.4 * rng.standard_normal())
    p_party = _sigmoid(-0.5 + 1.2 * u["party"])
    p_green = _sigmoid(-0.5 + u["greens"])
    study_len = 70.0 * math.exp(0.45 * u["study_duration"])
    realized = {"class_attendance": [0, 0], "weekday_exercise": 0.0, "study_duration": 0.0, "party": 0.0}

    nights = []  # (bed, wake) painter minutes
    wake_cap = {}
    parties = {}
    for k in range(n_days):
        base = base0 + k * MINUTES_PER_DAY
        wd = weekday_of(cfg.start_day + k)
        if rng.random() < p_green:
            s = base + rng.integers(15 * 60, 17 * 60)
            p.paint(s, s + rng.integers(20, 61), green)
        if wd >= 5 and rng.random() < 0.4:
            s = base + rng.integers(10 * 60, 11 * 60 + 30)
            p.paint(s, s + 60, offsite)
        if rng.random() < (p_gym_wd if wd < 5 else p_gym_we):
            s = base + (rng.integers(7 * 60, 8 * 60) if rng.random() < 0.4 else rng.integers(16 * 60 + 30, 18 * 60))
            e = s + rng.integers(45, 76)
            p.paint(s, e, gym, p.exercise)
            if wd < 5:
                realized["weekday_exercise"] += e - s
        sessions = [base + rng.integers(19 * 60, 20 * 60 + 31)]
        if wd < 5 and rng.random() < 0.5 or wd >= 5:
            sessions.append(base + rng.integers(13 * 60, 15 * 60 + 1))
        for s in sessions:
            length = int(np.clip(study_len * math.exp(0.25 * rng.standard_normal()), 20, 240))
            p.paint(s, s + length, library)
            realized["study_duration"] += length
        lunch = base + 12 * 60 + int(rng.normal(0, 20))
        p.paint(lunch, lunch + 35, food)
        dinner = base + 18 * 60 + 15 + int(rng.normal(0, 25))
        p.paint(dinner, dinner + 40, food)
        first_class = None
        for cwd, cs, ce, sp in courses:
            if cwd != wd:
                continue
            if rng.random() < p_att:
                p.paint(base + cs, base + ce, sp, p.in_class)
                realized["class_attendance"][0] += 1
                first_class = cs if first_class is None else min(first_class, cs)
            realized["class_attendance"][1] += 1
        if first_class is not None:
            wake_cap[k] = base + first_class - 25
        if wd in (4, 5) and rng.random() < p_party:
            s = base + 21 * 60 + 30 + int(rng.normal(0, 30))
            e = base + 25 * 60 + int(rng.normal(0, 40))
            parties[k] = (s, e)
            realized["party"] += 1
    for k, (s, e) in parties.items():
        p.paint(s, e, frat)

    for k in range(-1, n_days):
        base = base0 + k * MINUTES_PER_DAY
        wd = weekday_of(cfg.start_day + k)
        bed = base + 24 * 60 + 30 + 40 * u["bedtime"] + rng.normal(0, 35) + (70 if wd in (4, 5) else 0)
        if k in parties:
            bed = max(bed, parties[k][1] + 20)
        length = 60 * float(np.clip(7.3 + 0.5 * u["sleep_duration"] + rng.normal(0, 0.6), 4.5, 10.5))
        wake = bed + length
        if k + 1 in wake_cap:
            wake = min(wake, max(wake_cap[k + 1], bed + 180))
        bed, wake = int(round(bed)), int(round(wake))
        p.paint(bed, wake, 0, p.sleep)
        nights.append((bed, wake))
    p.exercise &= p.spot == gym
    p.in_class &= ~p.sleep
    realized["class_attendance"] = (realized["class_attendance"][0] / realized["class_attendance"][1]
                                    if realized["class_attendance"][1] else np.nan)
    return p, schedule, nights, realized, rng


def _fill_short_gaps(p: _Painter, max_gap=40):
    """Short awake stretches at home between two outings are spent at the next place."""
    code = np.where(p.sleep, -1, p.spot)
    brk = np.flatnonzero(np.diff(code) != 0) + 1
    starts = np.concatenate([[0], brk])
    ends = np.concatenate([brk, [len(code)]])
    for j in range(1, len(starts) - 1):
        a, b = starts[j], ends[j]
        if code[a] == 0 and b - a <= max_gap and code[starts[j - 1]] > 0 and code[b] > 0:
            p.spot[a:b] = code[b]


def _travel(p: _Painter, rng):
    """Insert travel minutes between consecutive places; returns (x, y, travel, vehicle)."""
    sx = np.array([s.x for s in p.spots])
    sy = np.array([s.y for s in p.spots])
    x = sx[p.spot].astype(float)
    y = sy[p.spot].astype(float)
    travel = np.zeros(p.n, dtype=bool)
    vehicle = np.zeros(p.n, dtype=bool)
    brk = np.flatnonzero(np.diff(p.spot) != 0) + 1
    starts = np.concatenate([[0], brk])
    ends = np.concatenate([brk, [p.n]])
    for j in range(len(starts) - 1):
        a0, a1 = starts[j], ends[j]
        b0, b1 = starts[j + 1], ends[j + 1]
        A, B = p.spot[a0], p.spot[b0]
        dist = math.hypot(sx[B] - sx[A], sy[B] - sy[A])
        if dist < 5:
            continue
        car = dist > 1500
        k = int(min(40, max(1, math.ceil(dist / (DRIVE_M_PER_MIN if car else WALK_M_PER_MIN)))))
        take_a = (a1 - a0 > k + 2) and not p.sleep[a1 - k:a1].any() and not p.in_class[a1 - k:a1].any()
        if take_a:
            lo, hi = a1 - k, a1
        else:
            lo, hi = b0, min(b0 + k, b1 - 1)
            if hi <= lo or p.sleep[lo:hi].any():
                continue
        frac = (np.arange(lo, hi) - lo + 1) / (hi - lo + 1)
        x[lo:hi] = sx[A] + frac * (sx[B] - sx[A])
        y[lo:hi] = sy[A] + frac * (sy[B] - sy[A])
        travel[lo:hi] = True
        vehicle[lo:hi] = car
    return x, y, travel, vehicle


# ---------------------------------------------------------------------------
# rendering


def _render(cfg, p: _Painter, nights, u, rng, t0):
    """Turn the painted plan into sensor streams (all times absolute minutes)."""
    _fill_short_gaps(p)
    x, y, travel, vehicle = _travel(p, rng)
    n = p.n
    t = t0 + np.arange(n, dtype=np.int64)
    keep = np.arange(n) >= MINUTES_PER_DAY // 2  # streams start at noon of day -1
    labels = np.array([s.label for s in p.spots], dtype=object)[p.spot]
    labels[travel] = "outside"
    kinds = np.array([s.kind for s in p.spots], dtype=object)[p.spot]
    kinds[travel] = "outside"
    kinds[p.in_class] = "class"
    buildings = np.array([s.building for s in p.spots], dtype=object)[p.spot]
    buildings[travel] = ""
    weekday = np.array([weekday_of(d) for d in (t // MINUTES_PER_DAY)])
    awake = ~p.sleep
    out = {}

    # location, 1 Hz-per-minute with GPS noise
    lat, lon = _to_latlon(x + rng.normal(0, GPS_NOISE_M, n), y + rng.normal(0, GPS_NOISE_M, n))
    out["Location"] = Stream("Location", t[keep], {"lat": np.round(lat[keep], 6), "lon": np.round(lon[keep], 6)})

    # activity
    act = np.full(n, "still", dtype=object)
    rnd = rng.random(n)
    act[awake & (rnd < 0.02)] = "tilting"
    act[awake & (labels == "living") & (rnd > 0.95)] = "on_foot"
    block = (np.arange(n) // 5)
    run = rng.random(block.max() + 1)[block] < 0.7
    act[p.exercise & run] = "running"
    act[p.exercise & ~run] = "walking"
    act[travel] = "walking"
    act[vehicle] = "in_vehicle"
    change = np.ones(n, dtype=bool)
    change[1:] = act[1:] != act[:-1]
    heartbeat = (np.arange(n) % 60) == 0
    emit = (change | heartbeat) & keep
    out["Activity"] = Stream("Activity", t[emit], {"type": act[emit]})

    # steps
    steps = np.zeros(n)
    steps[act == "still"] = rng.poisson(0.3, np.sum(act == "still"))
    steps[act == "tilting"] = rng.poisson(2.0, np.sum(act == "tilting"))
    for a, mu, sd in (("walking", 105, 12), ("on_foot", 80, 15), ("running", 155, 15)):
        m = act == a
        steps[m] = np.maximum(0, np.round(rng.normal(mu, sd, m.sum())))
    steps[p.sleep] = 0
    out["StepMinute"] = Stream("StepMinute", t[keep], {"steps": steps[keep]})

    # sleep minutes while in bed
    restless_rate = 1.0 * math.exp(0.5 * u["restless_sleep"]) / 60.0
    status = np.full(n, "", dtype=object)
    restless_total = 0
    for bed, wake in nights:
        bed, wake = max(bed, 0), min(wake, n)
        if wake - bed < 30:
            continue
        st = np.full(wake - bed, "asleep", dtype=object)
        onset = int(5 + rng.exponential(10))
        st[:onset] = "awake"
        for rate, state, extra in ((restless_rate, "restless", 1.5), (0.25 / 60.0, "awake", 3.0)):
            starts = np.flatnonzero(rng.random(wake - bed) < rate)
            for s in starts:
                if s < onset:
                    continue
                length = (1 if state == "restless" else 2) + rng.poisson(extra)
                st[s:s + length] = state
        st[len(st) - int(rng.integers(0, 6)):] = "awake"
        restless_total += int(np.sum(st == "restless"))
        status[bed:wake] = st
    in_bed = (status != "") & keep
    out["SleepMinute"] = Stream("SleepMinute", t[in_bed], {"status": status[in_bed]})

    # screen sessions
    wd_rate = 2.2 * math.exp(0.45 * u["weekday_phone_use"])
    we_rate = 2.2 * math.exp(0.45 * u["weekend_phone_use"])
    wd_len = 3.0 * math.exp(0.2 * u["weekday_phone_use"])
    we_len = 3.0 * math.exp(0.2 * u["weekend_phone_use"])
    rate = np.where(weekday < 5, wd_rate, we_rate) / 60.0
    rate = np.where(p.in_class, rate * 0.3, rate)
    rate[~awake] = 0.0
    cand = np.flatnonzero(rng.random(n) < rate)
    ev_t, ev_e = [], []
    busy_until = -1
    wd_sessions = 0
    for s in cand:
        if s <= busy_until:
            continue
        mean_len = wd_len if weekday[s] < 5 else we_len
        d = 1 + int(rng.geometric(1.0 / mean_len))
        e = min(s + d, n - 1)
        if p.sleep[s:e].any():
            continue
        ev_t += [s]
        ev_e += ["on"]
        if rng.random() < 0.85:
            ev_t.append(min(s + int(rng.random() < 0.3), e))
            ev_e.append("unlock")
            ev_t.append(e)
            ev_e.append("lock")
        ev_t.append(e)
        ev_e.append("off")
        busy_until = e
        wd_sessions += weekday[s] < 5
    ev_t = np.asarray(ev_t, dtype=np.int64)
    ev_e = np.asarray(ev_e, dtype=object)
    order = np.argsort(ev_t, kind="stable")
    ev_t, ev_e = ev_t[order], ev_e[order]
    sel = keep[ev_t] if ev_t.size else np.zeros(0, bool)
    out["Screen"] = Stream("Screen", t0 + ev_t[sel], {"event": ev_e[sel]})

    # battery: charge overnight
    bt_idx = np.flatnonzero((np.arange(n) % BATTERY_EVERY == 0) & keep)
    level = np.empty(len(bt_idx))
    lv = float(rng.uniform(40, 90))
    charging = p.sleep[bt_idx]
    for j in range(len(bt_idx)):
        lv = min(100.0, lv + 15.0) if charging[j] else max(3.0, lv - rng.uniform(1.0, 2.5))
        level[j] = round(lv, 1)
    out["Battery"] = Stream("Battery", t[bt_idx], {"level": level,
                                                  "status": np.where(charging, "charging", "discharging").astype(object)})

    # bluetooth scans
    own = [rng.bytes(6).hex(":") for _ in range(2)]
    social = math.exp(0.4 * u["social"])
    scans = np.flatnonzero((np.arange(n) % SCAN_EVERY == 0) & keep)
    b_t, b_a = [], []
    for s in scans:
        seen = []
        if rng.random() < 0.92:
            seen.append(own[0])
        if rng.random() < (0.7 if labels[s] in ("living", "study") and not travel[s] else 0.1):
            seen.append(own[1])
        lam = BT_RATE.get(kinds[s], BT_RATE.get(labels[s], 1.0)) * social
        pool = _BUILDING_POOL.get(buildings[s]) or _STREET_POOL
        k = min(rng.poisson(lam), len(pool))
        if k:
            seen += [pool[j] for j in rng.choice(len(pool), k, replace=False)]
        b_t += [t[s]] * len(seen)
        b_a += seen
    out["Bluetooth"] = Stream("Bluetooth", np.asarray(b_t, dtype=np.int64), {"address": np.asarray(b_a, dtype=object)})

    # wifi inside buildings
    w_t, w_b = [], []
    for s in scans:
        aps = _BUILDING_APS.get(buildings[s])
        if not aps:
            continue
        for j in np.flatnonzero(rng.random(len(aps)) < 0.6):
            w_t.append(t[s])
            w_b.append(aps[j])
    out["Wifi"] = Stream("Wifi", np.asarray(w_t, dtype=np.int64), {"bssid": np.asarray(w_b, dtype=object)})

    # calls
    c_rate = 1.5 * math.exp(0.5 * u["calls"])
    c_t, c_k, c_d = [], [], []
    for d in range(1, n // MINUTES_PER_DAY):
        lo = d * MINUTES_PER_DAY
        aw = np.flatnonzero(awake[lo:lo + MINUTES_PER_DAY]) + lo
        if aw.size == 0:
            continue
        for s in np.sort(rng.choice(aw, size=min(rng.poisson(c_rate), aw.size), replace=False)):
            kind = rng.choice(["incoming", "outgoing", "missed"], p=[0.45, 0.4, 0.15])
            c_t.append(t[s])
            c_k.append(str(kind))
            c_d.append(0.0 if kind == "missed" else float(round(rng.exponential(120.0))))
    out["Call"] = Stream("Call", np.asarray(c_t, dtype=np.int64),
                         {"type": np.asarray(c_k, dtype=object), "duration": np.asarray(c_d, dtype=float)})

    n_wd = max(1, sum(weekday_of(d) < 5 for d in cfg.days))
    realized = {"weekday_phone_use": wd_sessions / n_wd, "restless_sleep": restless_total / max(1, len(nights))}
    return out, realized


def inject_missingness(streams: dict, rate_by_sensor: dict, seed=0, outage_rate=0.0, days=None):
    """Drop events independently per sensor with the given rates.

    ``streams`` is ``{sensor: Stream}`` for one participant. With
    ``outage_rate`` > 0 and ``days`` given, each (sensor, day) additionally
    loses all of its events with that probability. Deterministic in ``seed``.
    """
    rng = seed if isinstance(seed, np.random.Generator) else _rng.substream(seed, "missingness")
    out = {}
    for sensor in SENSORS:
        s = streams.get(sensor)
        if s is None:
            continue
        keep = np.ones(len(s), dtype=bool)
        if outage_rate > 0 and days is not None:
            day = s.t // MINUTES_PER_DAY
            for d in days:
                if rng.random() < outage_rate:
                    keep &= day != d
        r = float(rate_by_sensor.get(sensor, 0.0))
        if not (0.0 <= r <= 1.0):
            raise ConfigError(f"missingness rate for {sensor} must be in [0, 1]")
        if r > 0:
            keep &= rng.random(len(s)) >= r
        out[sensor] = s if keep.all() else s.take(keep)
    return out


def _self_report(cfg, pids):
    rng = _rng.substream(cfg.seed, "gen", "self_report")
    n = len(pids)
    cols = {"participant_id": list(pids)}
    for j in range(cfg.n_self_report):
        cols[f"sr_item_{j + 1:02d}"] = rng.integers(1, 6, n).astype(float)
    cols["sr_pss"] = np.round(rng.normal(17, 6, n).clip(0, 40), 1)
    cols["sr_cesd"] = np.round(rng.gamma(3.0, 4.0, n).clip(0, 60), 1)
    cols["sr_service_provider"] = list(rng.choice(SR_PROVIDERS, n))
    df = pd.DataFrame(cols)
    # sparse survey missingness
    for c in df.columns[1:]:
        miss = rng.random(n) < 0.05
        df.loc[miss, c] = np.nan if c != "sr_service_provider" else None
    return df


def _latent(cfg: CohortConfig):
    n = cfg.n_participants
    width = max(3, len(str(n)))
    pids = tuple(f"{cfg.id_prefix}{i + 1:0{width}d}" for i in range(n))
    rng = _rng.substream(cfg.seed, "gen", "latent")
    z, thr = _latent_labels(n, cfg.low_performer_fraction, rng)
    rho = cfg.persistence
    z_prior = rho * z + math.sqrt(max(0.0, 1 - rho * rho)) * rng.standard_normal(n)
    return pids, z, z_prior, thr


def generate_labels(config: CohortConfig) -> LabelSet:
    """Current and prior GPA of a cohort without rendering its sensor streams.

    Matches ``generate_cohort(config).labels`` exactly.
    """
    config.validate()
    pids, z, z_prior, thr = _latent(config)
    return LabelSet(pids, _gpa_from_latent(z, thr), _gpa_from_latent(z_prior, thr))


def generate_cohort(config: CohortConfig) -> Cohort:
    """Generate a full synthetic cohort deterministically from ``config.seed``."""
    cfg = config
    cfg.validate()
    n = cfg.n_participants
    pids, z, z_prior, thr = _latent(cfg)
    gpa = _gpa_from_latent(z, thr)
    gpa_prior = _gpa_from_latent(z_prior, thr)
    traits = _exact_traits(n, cfg.trait_prevalences, _rng.substream(cfg.seed, "gen", "traits"))

    planted = {e.feature_family: e for e in cfg.planted_effects}
    prop_rng = _rng.substream(cfg.seed, "gen", "propensity")
    propensity = {}
    for fam in sorted(FAMILIES):
        eps = prop_rng.standard_normal(n)
        e = planted.get(fam)
        u = eps if e is None else e.direction * e.strength * (-z) + eps
        propensity[fam] = u + float(cfg.family_shift.get(fam, 0.0))

    campus_xy = _building_xy()
    t0 = (cfg.start_day - 1) * MINUTES_PER_DAY
    streams, schedules, realized = {}, {}, {f: {} for f in FAMILIES}
    for i, pid in enumerate(pids):
        u = {f: float(propensity[f][i]) for f in FAMILIES}
        painter, schedule, nights, real1, prng = _participant(cfg, i, pid, u, campus_xy)
        s, real2 = _render(cfg, painter, nights, u, prng, t0)
        miss_rng = _rng.substream(cfg.seed, "gen", "missingness", i)
        streams[pid] = inject_missingness(s, cfg.missingness, miss_rng, cfg.outage_rate, cfg.days)
        schedules[pid] = schedule
        for k, v in {**real1, **real2}.items():
            realized[k][pid] = float(v)
    realized = {k: v for k, v in realized.items() if v}
    labels = LabelSet(pids, gpa, gpa_prior)
    gt = GroundTruth(
        latent=dict(zip(pids, map(float, z))),
        latent_prior=dict(zip(pids, map(float, z_prior))),
        threshold=float(thr),
        effects=[dataclasses.asdict(e) for e in cfg.planted_effects],
        propensity={f: dict(zip(pids, map(float, v))) for f, v in propensity.items()},
        realized=realized,
        family_shift=dict(cfg.family_shift),
    )
    return Cohort(cfg, pids, streams, schedules, _self_report(cfg, pids), labels,
                  ProtectedTraits(pids, traits), gt, campus_map())


def generate_cohort_pair(config_a: CohortConfig, config_b: CohortConfig, shift: float = 0.0):
    """Two cohorts with the same planted signs; B's behaviour means move by ``shift`` SDs.

    Each family gets a random shift sign drawn from A's seed, so B's feature
    marginals differ from A's in both directions.
    """
    rng = _rng.substream(config_a.seed, "pair", "shift")
    signs = {f: float(rng.choice([-1.0, 1.0])) for f in sorted(FAMILIES)}
    fam_shift = {f: shift * s for f, s in signs.items()} if shift else {}
    if config_b.id_prefix == config_a.id_prefix:
        config_b = dataclasses.replace(config_b, id_prefix=config_a.id_prefix + "B")
    b_effects = {e.feature_family: e.direction for e in config_b.planted_effects}
    for e in config_a.planted_effects:
        if b_effects.get(e.feature_family, e.direction) != e.direction:
            raise ConfigError(f"planted sign of {e.feature_family} differs between cohorts")
    config_b = dataclasses.replace(config_b, family_shift={**fam_shift, **config_b.family_shift})
    return generate_cohort(config_a), generate_cohort(config_b)


# ---------------------------------------------------------------------------
# persistence

WEEKDAY_NAMES = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")


def _hhmm(m):
    return f"{m // 60:02d}:{m % 60:02d}"


def write_schedule_csv(path, schedules: dict):
    rows = [(pid, WEEKDAY_NAMES[c.weekday], _hhmm(c.start), _hhmm(c.end), c.building_id)
            for pid in sorted(schedules) for c in schedules[pid]]
    pd.DataFrame(rows, columns=["participant_id", "weekday", "start", "end", "building_id"]).to_csv(
        path, index=False, lineterminator="\n")


def read_schedule_csv(path) -> dict:
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    out = {}
    for i, r in enumerate(df.itertuples(index=False)):
        try:
            wd = WEEKDAY_NAMES.index(r.weekday)
            s = [int(v) for v in r.start.split(":")]
            e = [int(v) for v in r.end.split(":")]
        except (ValueError, AttributeError) as exc:
            raise DataError(f"bad schedule row {tuple(r)!r}", line=i + 2) from exc
        out.setdefault(r.participant_id, []).append(ClassBlock(wd, s[0] * 60 + s[1], e[0] * 60 + e[1], r.building_id))
    return {k: sorted(v) for k, v in out.items()}


def write_cohort(cohort: Cohort, out_dir, include_current_labels=True) -> list:
    """Write the cohort files; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "streams": out / "streams.csv",
        "schedule": out / "schedule.csv",
        "self_report": out / "self_report.csv",
        "labels": out / "labels.csv",
        "places": out / "places.json",
        "ground_truth": out / "ground_truth.json",
    }
    gt = {"config": cohort.config.to_dict(),
          "ground_truth": cohort.ground_truth.to_json() if cohort.ground_truth else None}
    writers = {
        "streams": lambda f: write_streams_csv(f, cohort.streams),
        "schedule": lambda f: write_schedule_csv(f, cohort.schedules),
        "self_report": lambda f: cohort.self_report.to_csv(f, index=False, lineterminator="\n", float_format="%.6g"),
        "labels": lambda f: write_labels_csv(f, cohort.labels, cohort.traits, include_current=include_current_labels),
        "places": lambda f: cohort.place_map.save(f),
        "ground_truth": lambda f: Path(f).write_text(json.dumps(gt, indent=1, sort_keys=True)),
    }
    for key, write in writers.items():
        with atomic_path(paths[key]) as tmp:
            write(tmp)
    return list(paths.values())


def read_cohort(in_dir) -> Cohort:
    d = Path(in_dir)
    try:
        meta = json.loads((d / "ground_truth.json").read_text())
        cfg = CohortConfig.from_dict(meta["config"])
    except FileNotFoundError:
        raise
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DataError(f"{d / 'ground_truth.json'}: {exc}") from exc
    labels, traits = read_labels_csv(d / "labels.csv")
    streams = read_streams_csv(d / "streams.csv", participants=list(labels.participants))
    schedules = read_schedule_csv(d / "schedule.csv")
    sr = pd.read_csv(d / "self_report.csv", dtype={"participant_id": str, "sr_service_provider": object})
    gt = meta.get("ground_truth")
    gt = GroundTruth(**gt) if gt else None
    return Cohort(cfg, labels.participants, streams, schedules, sr, labels, traits, gt,
                  PlaceMap.load(d / "places.json"))
