"""Labelled campus polygons and point-in-polygon lookup."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import DataError

PLACE_LABELS = ("exercise", "food", "frat", "greens", "living", "study")
OUTSIDE = "outside"


@dataclass(frozen=True)
class Place:
    id: str
    label: str
    polygon: np.ndarray  # [N, 2] (lat, lon), implicitly closed

    def contains(self, lat, lon) -> np.ndarray:
        lat = np.asarray(lat, dtype=float)
        lon = np.asarray(lon, dtype=float)
        poly = self.polygon
        inside = np.zeros(lat.shape, dtype=bool)
        lo_lat, lo_lon = poly.min(axis=0)
        hi_lat, hi_lon = poly.max(axis=0)
        cand = (lat >= lo_lat) & (lat <= hi_lat) & (lon >= lo_lon) & (lon <= hi_lon)
        if not cand.any():
            return inside
        y, x = lat[cand], lon[cand]
        hit = np.zeros(y.shape, dtype=bool)
        n = len(poly)
        for i in range(n):
            y1, x1 = poly[i]
            y2, x2 = poly[(i + 1) % n]
            crosses = (y1 > y) != (y2 > y)
            with np.errstate(divide="ignore", invalid="ignore"):
                xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            hit ^= crosses & (x < xint)
        inside[cand] = hit
        return inside

    @property
    def centroid(self):
        return self.polygon.mean(axis=0)


class PlaceMap:
    def __init__(self, places):
        self.places = list(places)
        ids = [p.id for p in self.places]
        if len(set(ids)) != len(ids):
            raise DataError("duplicate place ids")
        for p in self.places:
            if p.label not in PLACE_LABELS:
                raise DataError(f"place {p.id}: label {p.label!r} not in {PLACE_LABELS}")
        self.by_id = {p.id: p for p in self.places}

    def __len__(self):
        return len(self.places)

    def lookup(self, lat, lon):
        """Per-point (label, place id); points outside every polygon get ('outside', '')."""
        lat = np.asarray(lat, dtype=float)
        labels = np.full(lat.shape, OUTSIDE, dtype=object)
        ids = np.full(lat.shape, "", dtype=object)
        free = np.ones(lat.shape, dtype=bool)
        for p in self.places:
            hit = p.contains(lat, lon) & free
            labels[hit] = p.label
            ids[hit] = p.id
            free &= ~hit
        return labels, ids

    def to_json(self) -> str:
        return json.dumps([{"id": p.id, "label": p.label, "polygon": p.polygon.round(7).tolist()}
                           for p in self.places], indent=1)

    def save(self, path):
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "PlaceMap":
        try:
            raw = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: {exc}") from exc
        try:
            return cls(Place(str(r["id"]), str(r["label"]), np.asarray(r["polygon"], dtype=float)) for r in raw)
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path}: bad place record ({exc})") from exc


def rectangle(center_lat, center_lon, half_m_ns, half_m_ew):
    """Axis-aligned rectangle polygon around a centre, sizes in metres."""
    dlat = half_m_ns / 111_195.0
    dlon = half_m_ew / (111_195.0 * np.cos(np.radians(center_lat)))
    return np.array([
        [center_lat - dlat, center_lon - dlon],
        [center_lat - dlat, center_lon + dlon],
        [center_lat + dlat, center_lon + dlon],
        [center_lat + dlat, center_lon - dlon],
    ])
