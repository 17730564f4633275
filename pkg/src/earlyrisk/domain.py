"""Core data model, common cleaning steps and stream/label CSV formats.

Time is represented as integer minutes since 1970-01-01T00:00 in a single
naive local timezone. ``t // 1440`` is therefore the local day number and
``t % 1440`` the minute of the day.
"""
from __future__ import annotations

import csv
import datetime as dt
import enum
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import DataError, DomainError

MINUTES_PER_DAY = 1440
HIGH, LOW = 1, 0
GPA_CUTOFF = 3.2

SENSORS = (
    "Activity",
    "Battery",
    "Bluetooth",
    "Call",
    "Location",
    "Screen",
    "Wifi",
    "SleepMinute",
    "StepMinute",
)

# payload keys per sensor, and which are numeric
PAYLOAD_SCHEMA = {
    "Activity": {"type": str},
    "Battery": {"level": float, "status": str},
    "Bluetooth": {"address": str},
    "Call": {"type": str, "duration": float},
    "Location": {"lat": float, "lon": float},
    "Screen": {"event": str},
    "Wifi": {"bssid": str},
    "SleepMinute": {"status": str},
    "StepMinute": {"steps": float},
}

TRAITS = ("urm", "firstgen", "gender_min", "sexual_min")


class Epoch(enum.Enum):
    MORNING = ("morning", 360, 720)
    AFTERNOON = ("afternoon", 720, 1080)
    EVENING = ("evening", 1080, 1440)
    NIGHT = ("night", 0, 360)
    FULLDAY = ("allday", 0, 1440)

    def __init__(self, label, start, end):
        self.label = label
        self.start = start
        self.end = end

    @property
    def minutes(self) -> int:
        return self.end - self.start

    def window(self, day: int) -> tuple[int, int]:
        """Absolute [start, end) minutes of this epoch on day number ``day``."""
        base = day * MINUTES_PER_DAY
        return base + self.start, base + self.end


PARTIAL_EPOCHS = (Epoch.NIGHT, Epoch.MORNING, Epoch.AFTERNOON, Epoch.EVENING)
ALL_EPOCHS = PARTIAL_EPOCHS + (Epoch.FULLDAY,)


def to_minutes(ts) -> np.ndarray | int:
    """ISO-8601 string(s) or datetime(s) to integer minutes."""
    if isinstance(ts, (str, dt.datetime, np.datetime64)):
        return int(np.datetime64(ts, "m").astype(np.int64))
    return np.asarray(ts, dtype="datetime64[m]").astype(np.int64)


def day_number(date: dt.date) -> int:
    return int(np.datetime64(date, "D").astype(np.int64))


def date_of(day: int) -> dt.date:
    return np.datetime64(int(day), "D").astype(dt.date)


def format_minutes(t: np.ndarray) -> np.ndarray:
    return np.datetime_as_string(np.asarray(t, dtype=np.int64).astype("datetime64[m]"), unit="m")


@dataclass(frozen=True)
class SensorEvent:
    participant: str
    timestamp: int
    sensor: str
    payload: dict = field(hash=False, compare=True)

    def __post_init__(self):
        if self.sensor not in PAYLOAD_SCHEMA:
            raise DomainError(f"unknown sensor {self.sensor!r}")
        missing = set(PAYLOAD_SCHEMA[self.sensor]) - set(self.payload)
        if missing:
            raise DomainError(f"{self.sensor} payload lacks {sorted(missing)}")


class Stream:
    """Columnar, time-sorted events of one sensor for one participant."""

    __slots__ = ("sensor", "t", "fields")

    def __init__(self, sensor: str, t, fields: dict | None = None):
        self.sensor = sensor
        self.t = np.asarray(t, dtype=np.int64)
        self.fields = {k: np.asarray(v) for k, v in (fields or {}).items()}
        if self.t.size > 1 and np.any(np.diff(self.t) < 0):
            raise DomainError(f"{sensor} stream timestamps are not sorted")
        for k, v in self.fields.items():
            if v.shape[0] != self.t.shape[0]:
                raise DomainError(f"{sensor}.{k} length mismatch")

    @classmethod
    def empty(cls, sensor):
        kinds = PAYLOAD_SCHEMA[sensor]
        return cls(sensor, np.empty(0, np.int64),
                   {k: np.empty(0, dtype=float if v is float else object) for k, v in kinds.items()})

    @classmethod
    def from_events(cls, events, sensor):
        evs = [e for e in events if e.sensor == sensor]
        if not evs:
            return cls.empty(sensor)
        kinds = PAYLOAD_SCHEMA[sensor]
        return cls(sensor, [e.timestamp for e in evs],
                   {k: np.array([kind(e.payload[k]) for e in evs], dtype=float if kind is float else object)
                    for k, kind in kinds.items()})

    def __len__(self):
        return self.t.shape[0]

    def __getitem__(self, key):
        return self.fields[key]

    def take(self, idx) -> "Stream":
        return Stream(self.sensor, self.t[idx], {k: v[idx] for k, v in self.fields.items()})

    def window(self, lo: int, hi: int) -> "Stream":
        """Events with ``lo <= t < hi``."""
        a, b = np.searchsorted(self.t, [lo, hi], side="left")
        return self.take(slice(a, b))

    def events(self, participant=""):
        return [SensorEvent(participant, int(self.t[i]), self.sensor,
                            {k: (v[i].item() if hasattr(v[i], "item") else v[i]) for k, v in self.fields.items()})
                for i in range(len(self))]


def slice_epoch(stream, day, epoch: Epoch):
    """Events of ``stream`` inside ``epoch`` of ``day``.

    ``stream`` is either a :class:`Stream` or a time-sorted list of
    :class:`SensorEvent`; ``day`` is a :class:`datetime.date` or day number.
    The night epoch of day D is [D 00:00, D 06:00).
    """
    if isinstance(day, dt.date):
        day = day_number(day)
    lo, hi = epoch.window(day)
    if isinstance(stream, Stream):
        return stream.window(lo, hi)
    ts = [e.timestamp for e in stream]
    a, b = np.searchsorted(ts, [lo, hi], side="left")
    return list(stream[a:b])


# ---------------------------------------------------------------------------
# labels


def label_from_gpa(gpa: float) -> int:
    """HIGH iff GPA strictly above 3.2, LOW otherwise."""
    g = float(gpa)
    if not (0.0 <= g <= 4.0):
        raise DomainError(f"GPA {gpa!r} outside [0, 4]")
    return HIGH if g > GPA_CUTOFF else LOW


def labels_from_gpa(gpa) -> np.ndarray:
    """Vectorised :func:`label_from_gpa`; NaN GPA gives -1."""
    g = np.asarray(gpa, dtype=float)
    ok = ~np.isnan(g)
    if np.any((g[ok] < 0) | (g[ok] > 4)):
        raise DomainError("GPA outside [0, 4]")
    out = np.full(g.shape, -1, dtype=np.int64)
    out[ok] = np.where(g[ok] > GPA_CUTOFF, HIGH, LOW)
    return out


def label_name(y) -> str:
    return "High" if int(y) == HIGH else "Low"


def parse_label(s) -> int:
    s = str(s).strip().lower()
    if s == "high":
        return HIGH
    if s == "low":
        return LOW
    raise DataError(f"bad label {s!r}")


@dataclass(frozen=True)
class LabelSet:
    participants: tuple
    gpa_current: np.ndarray
    gpa_prior: np.ndarray  # NaN where unknown

    @property
    def binary_current(self):
        return labels_from_gpa(self.gpa_current)

    @property
    def binary_prior(self):
        return labels_from_gpa(self.gpa_prior)


@dataclass(frozen=True)
class ProtectedTraits:
    participants: tuple
    values: dict  # trait -> bool array

    def group(self, trait) -> np.ndarray:
        return np.asarray(self.values[trait], dtype=bool)


# ---------------------------------------------------------------------------
# daily feature matrix and common cleaning


@dataclass
class DailyFeatureMatrix:
    participants: list
    days: list  # datetime.date
    features: list
    values: np.ndarray  # [P, D, F]; NaN where masked
    mask: np.ndarray  # True = missing

    def __post_init__(self):
        p, d, f = len(self.participants), len(self.days), len(self.features)
        if self.values.shape != (p, d, f) or self.mask.shape != (p, d, f):
            raise DomainError(f"shape {self.values.shape} does not match index ({p}, {d}, {f})")
        if len(set(self.features)) != f:
            raise DomainError("duplicate feature names")
        self.values = np.where(self.mask, np.nan, self.values)

    @classmethod
    def from_values(cls, participants, days, features, values):
        values = np.asarray(values, dtype=float)
        return cls(list(participants), list(days), list(features), values, np.isnan(values))

    def select(self, features) -> "DailyFeatureMatrix":
        idx = [self.features.index(f) for f in features]
        return DailyFeatureMatrix(self.participants, self.days, list(features),
                                  self.values[:, :, idx], self.mask[:, :, idx])

    def subset(self, participants) -> "DailyFeatureMatrix":
        pos = {p: i for i, p in enumerate(self.participants)}
        idx = [pos[p] for p in participants]
        return DailyFeatureMatrix(list(participants), self.days, self.features,
                                  self.values[idx], self.mask[idx])

    def to_long(self) -> pd.DataFrame:
        pi, di, fi = np.nonzero(~self.mask)
        return pd.DataFrame({
            "participant_id": np.asarray(self.participants, dtype=object)[pi],
            "date": [self.days[i].isoformat() for i in di],
            "feature": np.asarray(self.features, dtype=object)[fi],
            "value": self.values[pi, di, fi],
        })

    @classmethod
    def from_long(cls, df: pd.DataFrame, participants=None, days=None, features=None):
        participants = list(participants if participants is not None else sorted(df.participant_id.unique()))
        days = list(days if days is not None else
                    sorted(dt.date.fromisoformat(d) for d in df.date.unique()))
        features = list(features if features is not None else sorted(df.feature.unique()))
        values = np.full((len(participants), len(days), len(features)), np.nan)
        pmap = {p: i for i, p in enumerate(participants)}
        dmap = {d.isoformat(): i for i, d in enumerate(days)}
        fmap = {f: i for i, f in enumerate(features)}
        try:
            pi = df.participant_id.map(pmap).to_numpy()
            di = df.date.map(dmap).to_numpy()
            fi = df.feature.map(fmap).to_numpy()
        except KeyError as exc:  # pragma: no cover
            raise DataError(str(exc)) from exc
        if np.isnan(pi.astype(float)).any() or np.isnan(di.astype(float)).any() or np.isnan(fi.astype(float)).any():
            raise DataError("long-format rows reference unknown participant/date/feature")
        values[pi.astype(int), di.astype(int), fi.astype(int)] = df.value.to_numpy(dtype=float)
        return cls.from_values(participants, days, features, values)


def iqr_caps(values) -> tuple[float, float] | None:
    """Lower/upper caps (Q1 - 1.5 IQR, Q3 + 1.5 IQR) with linear-interpolation quartiles."""
    v = np.asarray(values, dtype=float)
    v = v[~np.isnan(v)]
    if v.size < 4:
        return None
    q1, q3 = np.percentile(v, [25, 75], method="linear")
    iqr = q3 - q1
    return q1 - 1.5 * iqr, q3 + 1.5 * iqr


def cap_outliers_iqr(series) -> np.ndarray:
    """Clip one participant's series of one feature to its IQR fences.

    NaN cells are missing and pass through; fewer than four observed values
    means no capping.
    """
    s = np.asarray(series, dtype=float)
    caps = iqr_caps(s)
    if caps is None:
        return s.copy()
    out = np.clip(s, caps[0], caps[1])
    out[np.isnan(s)] = np.nan
    return out


def cap_outliers_matrix(m: DailyFeatureMatrix, skip=()) -> DailyFeatureMatrix:
    """Per-participant, per-feature IQR capping over all days.

    Features named in ``skip`` (e.g. one-hot indicators) are left alone.
    """
    vals = m.values.copy()
    skip = set(skip)
    for fi, name in enumerate(m.features):
        if name in skip:
            continue
        block = vals[:, :, fi]
        n_obs = np.sum(~np.isnan(block), axis=1)
        for pi in np.flatnonzero(n_obs >= 4):
            block[pi] = cap_outliers_iqr(block[pi])
    return DailyFeatureMatrix(m.participants, m.days, m.features, vals, np.isnan(vals))


def one_hot(column, categories=None) -> dict:
    """Indicator columns for a categorical column.

    Missing cells (``None`` or NaN) give NaN in every indicator. Returns an
    ordered ``{category: float array}`` mapping over sorted categories.
    """
    col = list(column)

    def _missing(v):
        return v is None or (isinstance(v, float) and np.isnan(v))

    if categories is None:
        categories = sorted({str(v) for v in col if not _missing(v)})
    out = {}
    miss = np.array([_missing(v) for v in col], dtype=bool)
    keys = np.array(["" if _missing(v) else str(v) for v in col], dtype=object)
    for c in categories:
        ind = (keys == c).astype(float)
        ind[miss] = np.nan
        out[c] = ind
    return out


def drop_all_missing(m: DailyFeatureMatrix) -> DailyFeatureMatrix:
    """Remove features with no observed cell; order preserved."""
    keep = [f for i, f in enumerate(m.features) if not m.mask[:, :, i].all()]
    if len(keep) == len(m.features):
        return m
    return m.select(keep)


# ---------------------------------------------------------------------------
# CSV formats


def _payload_string(sensor: str, fields: dict) -> np.ndarray:
    parts = []
    for key, kind in PAYLOAD_SCHEMA[sensor].items():
        v = fields[key]
        if kind is float:
            sv = pd.Series(v).map(lambda x: format(float(x), ".6f").rstrip("0").rstrip(".")).to_numpy(dtype=object)
        else:
            sv = np.asarray(v, dtype=object).astype(str)
        parts.append(key + "=" + pd.Series(sv, dtype=object))
    out = parts[0]
    for p in parts[1:]:
        out = out + ";" + p
    return out.to_numpy(dtype=object)


def write_streams_csv(path, streams: dict) -> None:
    """``streams`` maps participant id to ``{sensor: Stream}``."""
    frames = []
    for pid in sorted(streams):
        for sensor in SENSORS:
            s = streams[pid].get(sensor)
            if s is None or len(s) == 0:
                continue
            frames.append(pd.DataFrame({
                "participant_id": pid,
                "timestamp": format_minutes(s.t),
                "sensor": sensor,
                "payload": _payload_string(sensor, s.fields),
            }))
    cols = ["participant_id", "timestamp", "sensor", "payload"]
    df = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=cols)
    df.to_csv(path, index=False, columns=cols, lineterminator="\n")


def read_streams_csv(path, participants=None) -> dict:
    """Parse a stream CSV into ``{participant: {sensor: Stream}}``.

    Raises :class:`DataError` carrying the file line number of the first
    malformed row.
    """
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.ParserError as exc:
        raise DataError(f"unparseable stream file: {exc}") from exc
    expected = ["participant_id", "timestamp", "sensor", "payload"]
    if list(df.columns) != expected:
        raise DataError(f"stream header must be {','.join(expected)}", line=1)
    line = np.arange(len(df)) + 2
    ts = pd.to_datetime(df.timestamp, format="%Y-%m-%dT%H:%M", errors="coerce")
    bad = ts.isna().to_numpy() | (df.participant_id == "").to_numpy()
    bad |= ~df.sensor.isin(SENSORS).to_numpy()
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise DataError(f"malformed row {df.iloc[i].tolist()!r}", line=int(line[i]))
    df = df.assign(t=ts.to_numpy().astype("datetime64[m]").astype(np.int64), line=line)
    out = {pid: {} for pid in (participants or sorted(df.participant_id.unique()))}
    for sensor, g in df.groupby("sensor", sort=False):
        keys = PAYLOAD_SCHEMA[sensor]
        pattern = "^" + ";".join(f"{k}=(?P<{k}>[^;=]*)" for k in keys) + "$"
        parsed = g.payload.str.extract(pattern)
        badp = parsed.isna().any(axis=1).to_numpy()
        cols = {}
        for k, kind in keys.items():
            if kind is float:
                num = pd.to_numeric(parsed[k], errors="coerce")
                badp |= num.isna().to_numpy()
                cols[k] = num.to_numpy(dtype=float)
            else:
                cols[k] = parsed[k].to_numpy(dtype=object)
        if badp.any():
            i = int(np.flatnonzero(badp)[0])
            raise DataError(f"bad {sensor} payload {g.payload.iloc[i]!r}", line=int(g.line.iloc[i]))
        pids = g.participant_id.to_numpy()
        tt = g.t.to_numpy()
        for pid in np.unique(pids):
            sel = np.flatnonzero(pids == pid)
            order = sel[np.argsort(tt[sel], kind="stable")]
            if pid not in out:
                if participants is not None:
                    continue
                out[pid] = {}
            out[pid][sensor] = Stream(sensor, tt[order], {k: v[order] for k, v in cols.items()})
    return out


LABEL_COLUMNS = ["participant_id", "gpa_current", "gpa_prior", *TRAITS]


def write_labels_csv(path, labels: LabelSet, traits: ProtectedTraits, include_current=True) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LABEL_COLUMNS)
    for i, pid in enumerate(labels.participants):
        gc = labels.gpa_current[i] if include_current else np.nan
        gp = labels.gpa_prior[i]
        row = [pid, "" if np.isnan(gc) else f"{gc:.2f}", "" if np.isnan(gp) else f"{gp:.2f}"]
        row += [int(bool(traits.values[t][i])) for t in TRAITS]
        w.writerow(row)
    Path(path).write_text(buf.getvalue())


def read_labels_csv(path) -> tuple[LabelSet, ProtectedTraits]:
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise DataError(f"unparseable label file: {exc}") from exc
    if list(df.columns) != LABEL_COLUMNS:
        raise DataError(f"label header must be {','.join(LABEL_COLUMNS)}", line=1)

    def _num(col):
        v = pd.to_numeric(df[col], errors="coerce")  # "" becomes NaN
        bad = v.isna() & (df[col] != "")
        if bad.any():
            raise DataError(f"bad {col} value", line=int(np.flatnonzero(bad.to_numpy())[0]) + 2)
        return v.to_numpy(dtype=float)

    pids = tuple(df.participant_id)
    if len(set(pids)) != len(pids):
        raise DataError("duplicate participant ids in label file")
    gc, gp = _num("gpa_current"), _num("gpa_prior")
    for arr in (gc, gp):
        ok = ~np.isnan(arr)
        if np.any((arr[ok] < 0) | (arr[ok] > 4)):
            raise DataError("GPA outside [0, 4]")
    tv = {}
    for t in TRAITS:
        col = df[t]
        if not col.isin(["0", "1"]).all():
            raise DataError(f"trait {t} must be 0/1", line=int(np.flatnonzero(~col.isin(["0", "1"]).to_numpy())[0]) + 2)
        tv[t] = (col == "1").to_numpy()
    return LabelSet(pids, gc, gp), ProtectedTraits(pids, tv)
