"""Trajectory dataset parsing and grid discretization.

Supports the two common raw formats (PLT track logs with a 6-line
header, and tab-separated check-in records), plus a seeded lazy random
walk for dataset-free runs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Iterable, TextIO

import numpy as np

from .grid import GridWorld
from .trajectory import Trajectory

GEOLIFE_HEADER_LINES = 6
WALK_STAY_PROB = 0.5


class ParseError(ValueError):
    """Malformed input record; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float
    timestamp: datetime

    def __post_init__(self) -> None:
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} out of range")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude {self.lon} out of range")


@dataclass(frozen=True)
class BBox:
    """Latitude/longitude bounds, min corner inclusive, max edge inclusive."""

    min_lat: float
    min_lon: float
    max_lat: float
    max_lon: float

    def __post_init__(self) -> None:
        if self.min_lat >= self.max_lat or self.min_lon >= self.max_lon:
            raise ValueError("bbox must have positive latitude and longitude extent")

    def contains(self, p: GeoPoint) -> bool:
        return self.min_lat <= p.lat <= self.max_lat and self.min_lon <= p.lon <= self.max_lon


def _parse_utc(text: str, line: int) -> datetime:
    # 3.10 fromisoformat rejects the trailing Z, so normalize it first.
    try:
        stamp = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError:
        raise ParseError(line, f"bad timestamp {text!r}") from None
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=timezone.utc)
    return stamp.astimezone(timezone.utc)


def parse_geolife(stream: Iterable[str] | TextIO) -> list[GeoPoint]:
    """Parse one PLT track log.

    Layout: 6 header lines, then comma-separated records
    lat,lon,flag,altitude,datenum,date,time with date+time in UTC.
    """
    points = []
    lineno = 0
    for lineno, raw in enumerate(stream, start=1):
        if lineno <= GEOLIFE_HEADER_LINES:
            continue
        line = raw.strip()
        if not line:
            continue
        fields = line.split(",")
        if len(fields) != 7:
            raise ParseError(lineno, f"expected 7 fields, got {len(fields)}")
        try:
            lat = float(fields[0])
            lon = float(fields[1])
        except ValueError:
            raise ParseError(lineno, f"bad coordinates {fields[0]!r},{fields[1]!r}") from None
        stamp = _parse_utc(f"{fields[5]}T{fields[6]}", lineno)
        try:
            points.append(GeoPoint(lat, lon, stamp))
        except ValueError as exc:
            raise ParseError(lineno, str(exc)) from None
    if lineno < GEOLIFE_HEADER_LINES:
        raise ParseError(lineno, f"expected {GEOLIFE_HEADER_LINES} header lines, got {lineno}")
    return points


def parse_gowalla(stream: Iterable[str] | TextIO) -> list[tuple[int, GeoPoint]]:
    """Parse tab-separated check-ins: user, ISO-8601 time, lat, lon, location id."""
    records = []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 5:
            raise ParseError(lineno, f"expected 5 tab-separated fields, got {len(fields)}")
        try:
            user = int(fields[0])
        except ValueError:
            raise ParseError(lineno, f"bad user id {fields[0]!r}") from None
        stamp = _parse_utc(fields[1], lineno)
        try:
            lat = float(fields[2])
            lon = float(fields[3])
        except ValueError:
            raise ParseError(lineno, f"bad coordinates {fields[2]!r},{fields[3]!r}") from None
        try:
            records.append((user, GeoPoint(lat, lon, stamp)))
        except ValueError as exc:
            raise ParseError(lineno, str(exc)) from None
    return records


def discretize(
    points: list[GeoPoint],
    grid: GridWorld,
    bbox: BBox,
    tick_seconds: float,
    *,
    epoch: datetime | None = None,
    user: int = 0,
) -> Trajectory:
    """Bin points onto the grid and quantize timestamps to ticks.

    Equirectangular: the bbox is mapped linearly onto the grid, cell 0 at
    the min corner. Points outside the bbox are errors, never clamped.
    Within one tick the first fix wins; consecutive duplicate
    (tick, cell) pairs collapse to one entry. `epoch` defaults to the
    first point's timestamp.
    """
    if tick_seconds <= 0:
        raise ValueError(f"tick_seconds must be positive, got {tick_seconds}")
    if not points:
        return Trajectory(user, ())
    if epoch is None:
        epoch = points[0].timestamp
    lat_span = bbox.max_lat - bbox.min_lat
    lon_span = bbox.max_lon - bbox.min_lon
    entries: list[tuple[int, int]] = []
    for p in points:
        if not bbox.contains(p):
            raise ValueError(
                f"point ({p.lat}, {p.lon}) at {p.timestamp.isoformat()} is outside the bbox"
            )
        row = min(int((p.lat - bbox.min_lat) / lat_span * grid.height), grid.height - 1)
        col = min(int((p.lon - bbox.min_lon) / lon_span * grid.width), grid.width - 1)
        cell = grid.cell_at(row, col)
        tick = math.floor((p.timestamp - epoch).total_seconds() / tick_seconds)
        if entries and entries[-1][0] >= tick:
            continue  # first fix within a tick wins; duplicates collapse
        entries.append((tick, cell))
    return Trajectory(user, tuple(entries))


def cell_center_geo(grid: GridWorld, bbox: BBox, cell: int) -> tuple[float, float]:
    """(lat, lon) of the cell center under the same equirectangular map."""
    row, col = grid.row_col(cell)
    lat = bbox.min_lat + (row + 0.5) / grid.height * (bbox.max_lat - bbox.min_lat)
    lon = bbox.min_lon + (col + 0.5) / grid.width * (bbox.max_lon - bbox.min_lon)
    return lat, lon


def walk_seed(seed: int, user: int) -> np.random.SeedSequence:
    """Per-user sub-seed for synthetic walks, disjoint from perturbation seeds."""
    return np.random.SeedSequence(entropy=seed, spawn_key=(1, user))


def synth_walk(grid: GridWorld, users: int, ticks: int, seed: int) -> list[Trajectory]:
    """Seeded lazy random walks: stay with probability 0.5, otherwise move
    to a uniformly chosen king neighbor. One dense entry per tick."""
    if users < 1 or ticks < 1:
        raise ValueError("need at least one user and one tick")
    out = []
    for user in range(users):
        rng = np.random.default_rng(walk_seed(seed, user))
        cell = int(rng.integers(grid.n_cells))
        entries = []
        for tick in range(ticks):
            entries.append((tick, cell))
            if rng.random() >= WALK_STAY_PROB:
                moves = grid.king_neighbors(cell)
                cell = int(moves[rng.integers(len(moves))])
        out.append(Trajectory(user, tuple(entries)))
    return out
