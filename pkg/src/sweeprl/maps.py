"""Text map format: '.' free, '#' obstacle, 'S' free start cell.

Rows must be equally long and at most one 'S' may appear.  A few ready-made
rooms ship as package data under sweeprl/maps/.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np

from .errors import (EmptyMapError, MultipleStartsError, RaggedRowsError,
                     UnknownCharError)
from .world import GridMap

FREE, OBSTACLE, START = ".", "#", "S"


def parse_map(text: str) -> GridMap:
    lines = [ln.rstrip("\r") for ln in text.split("\n")]
    while lines and not lines[0].strip():
        lines.pop(0)
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise EmptyMapError("map text contains no rows")
    width = len(lines[0])
    obstacle = np.zeros((len(lines), width), dtype=np.bool_)
    start = None
    for r, line in enumerate(lines):
        if len(line) != width:
            raise RaggedRowsError(f"row {r} has {len(line)} chars, expected {width}")
        for c, ch in enumerate(line):
            if ch == OBSTACLE:
                obstacle[r, c] = True
            elif ch == START:
                if start is not None:
                    raise MultipleStartsError(f"second start at ({r}, {c}), first at {start}")
                start = (r, c)
            elif ch != FREE:
                raise UnknownCharError(f"unknown map char {ch!r} at ({r}, {c})")
    return GridMap(obstacle, start=start)


def render_map(grid: GridMap) -> str:
    rows = []
    for r in range(grid.height):
        row = []
        for c in range(grid.width):
            if grid.start == (r, c):
                row.append(START)
            elif grid.obstacle[r, c]:
                row.append(OBSTACLE)
            else:
                row.append(FREE)
        rows.append("".join(row))
    return "\n".join(rows) + "\n"


def load_map(path) -> GridMap:
    return parse_map(Path(path).read_text(encoding="ascii"))


def save_map(path, grid: GridMap) -> None:
    Path(path).write_text(render_map(grid), encoding="ascii")


def list_builtin_maps() -> list[str]:
    root = resources.files("sweeprl") / "maps"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".txt"))


def builtin_map(name: str) -> GridMap:
    root = resources.files("sweeprl") / "maps"
    path = root / f"{name}.txt"
    try:
        text = path.read_text(encoding="ascii")
    except FileNotFoundError:
        raise KeyError(f"no builtin map {name!r}; have {list_builtin_maps()}") from None
    return parse_map(text)


def get_map(spec: str) -> GridMap:
    """Resolve a CLI map argument: builtin name first, then filesystem path."""
    root = resources.files("sweeprl") / "maps"
    if (root / f"{spec}.txt").is_file():
        return builtin_map(spec)
    return load_map(spec)


def reachable_mask(grid: GridMap, src: tuple[int, int]) -> np.ndarray:
    """Cells reachable from src by 8-connected moves through free cells."""
    h, w = grid.height, grid.width
    reach = np.zeros((h, w), dtype=np.bool_)
    reach[src] = True
    while True:
        grow = np.zeros_like(reach)
        grow[:-1, :] |= reach[1:, :]
        grow[1:, :] |= reach[:-1, :]
        grow[:, :-1] |= reach[:, 1:]
        grow[:, 1:] |= reach[:, :-1]
        grow[:-1, :-1] |= reach[1:, 1:]
        grow[1:, 1:] |= reach[:-1, :-1]
        grow[:-1, 1:] |= reach[1:, :-1]
        grow[1:, :-1] |= reach[:-1, 1:]
        new = grow & ~grid.obstacle & ~reach
        if not new.any():
            return reach
        reach |= new


def fully_reachable(grid: GridMap, src: tuple[int, int] | None = None) -> bool:
    """True when every free cell can be reached from the start cell."""
    if src is None:
        src = grid.start if grid.start is not None else grid.first_free()
    return bool((reachable_mask(grid, src) | grid.obstacle).all())
