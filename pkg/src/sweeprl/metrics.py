"""Per-episode training metrics and their CSV serialisation.

The CSV layout is fixed (header below, floats at 6 decimal places, LF line
endings) so identical runs produce byte-identical files.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from .errors import MalformedCsvError

CSV_HEADER = ("episode", "steps", "coverage", "distance_m", "rotation_units",
              "base_reward", "shaped_reward", "wall_hits", "seed")


@dataclass
class MetricsRecord:
    """One training or evaluation episode, as it ran (pre-filtering)."""

    episode: int
    steps: int
    coverage: float
    distance_m: float
    rotation_units: int
    base_reward: float
    shaped_reward: float
    wall_hits: int
    seed: int

    def row(self) -> str:
        return (f"{self.episode},{self.steps},{self.coverage:.6f},"
                f"{self.distance_m:.6f},{self.rotation_units},"
                f"{self.base_reward:.6f},{self.shaped_reward:.6f},"
                f"{self.wall_hits},{self.seed}")


def write_csv(path, records) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(CSV_HEADER)]
    lines.extend(r.row() for r in records)
    path.write_bytes(("\n".join(lines) + "\n").encode("ascii"))


def read_csv(path) -> list[MetricsRecord]:
    path = Path(path)
    try:
        text = path.read_text(encoding="ascii")
    except OSError as e:
        raise MalformedCsvError(f"cannot read {path}: {e}") from e
    rows = list(csv.reader(text.splitlines()))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise MalformedCsvError(f"{path}: bad or missing header")
    out = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(CSV_HEADER):
            raise MalformedCsvError(f"{path}:{i}: expected {len(CSV_HEADER)} fields, got {len(row)}")
        try:
            out.append(MetricsRecord(
                episode=int(row[0]), steps=int(row[1]), coverage=float(row[2]),
                distance_m=float(row[3]), rotation_units=int(row[4]),
                base_reward=float(row[5]), shaped_reward=float(row[6]),
                wall_hits=int(row[7]), seed=int(row[8])))
        except ValueError as e:
            raise MalformedCsvError(f"{path}:{i}: {e}") from e
    return out


def final_window(records, n: int) -> list[MetricsRecord]:
    """Last n records (or all of them when fewer exist)."""
    return list(records[-n:]) if n > 0 else []


def mean_of(records, attr: str) -> float:
    if not records:
        raise ValueError("no records to average")
    return sum(getattr(r, attr) for r in records) / len(records)
