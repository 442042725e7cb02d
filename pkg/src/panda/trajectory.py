"""Timestamped cell sequences and the user_id,tick,cell stream format."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, NamedTuple


@dataclass(frozen=True)
class Trajectory:
    """One user's (tick, cell) sequence with strictly increasing ticks."""

    user: int
    entries: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        prev = None
        for tick, _cell in self.entries:
            if prev is not None and tick <= prev:
                raise ValueError(f"trajectory ticks must strictly increase; {tick} after {prev}")
            prev = tick

    def __len__(self) -> int:
        return len(self.entries)

    def ticks(self) -> tuple[int, ...]:
        return tuple(t for t, _ in self.entries)

    def cells(self) -> tuple[int, ...]:
        return tuple(c for _, c in self.entries)

    def cell_at(self, tick: int) -> int | None:
        """Piecewise-constant position: the last fix at or before `tick`.

        None before the first fix (the client has nothing to report yet).
        """
        current = None
        for t, c in self.entries:
            if t > tick:
                break
            current = c
        return current


class StreamRecord(NamedTuple):
    """One released (or ground-truth) observation; cell None marks a gap
    where the client refused to release."""

    user: int
    tick: int
    cell: int | None


def write_stream_csv(records: Iterable[StreamRecord]) -> str:
    """Serialize records as user_id,tick,cell; gaps get an empty cell field."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["user_id", "tick", "cell"])
    for rec in records:
        writer.writerow([rec.user, rec.tick, "" if rec.cell is None else rec.cell])
    return buf.getvalue()


def read_stream_csv(text: str) -> list[StreamRecord]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != ["user_id", "tick", "cell"]:
        raise ValueError(f"expected header user_id,tick,cell, got {header}")
    out = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise ValueError(f"line {lineno}: expected 3 fields, got {len(row)}")
        user, tick, cell = row
        out.append(StreamRecord(int(user), int(tick), None if cell == "" else int(cell)))
    return out


def stream_to_trajectories(records: Iterable[StreamRecord]) -> dict[int, Trajectory]:
    """Group non-gap records into per-user trajectories (ticks must already
    be strictly increasing per user)."""
    per_user: dict[int, list[tuple[int, int]]] = {}
    for rec in records:
        if rec.cell is None:
            continue
        per_user.setdefault(rec.user, []).append((rec.tick, rec.cell))
    return {u: Trajectory(u, tuple(entries)) for u, entries in per_user.items()}
