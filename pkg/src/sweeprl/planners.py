"""Scripted baseline controllers: bounce-random walk and serpentine sweep.

The random walker keeps its heading until the cell ahead is blocked, then
picks a random passable octant — long straight flights with random bounces.
The zigzag planner visits free cells row by row in alternating direction,
patching any non-adjacent hop (obstacles, row gaps) with a shortest
breadth-first path through free cells.
"""

from __future__ import annotations

import numpy as np

from .errors import TrappedError, UnreachableError
from .seeding import COMP_PLANNER, component_rng
from .world import COL_OFF, ROW_OFF, CleaningEnv, GridMap


def free_octants(grid: GridMap, r: int, c: int) -> list[int]:
    """Actions whose target cell is inside the map and not an obstacle."""
    return [k for k in range(8)
            if grid.is_free(r + int(ROW_OFF[k]), c + int(COL_OFF[k]))]


def random_step(grid: GridMap, r: int, c: int, heading: int,
                rng: np.random.Generator) -> int:
    """Keep going straight; on a blocked cell ahead, bounce to a uniformly
    random passable octant (redrawn until the target cell is free).
    Raises TrappedError when every octant is blocked.

    Note: on an empty square map this walker's bounce points form an
    absorbing set of corners (walls + main diagonals get traversed forever),
    so full coverage is never reached there — episodes run to their cap.
    Obstacle maps break the symmetry and do get covered.
    """
    if grid.is_free(r + int(ROW_OFF[heading]), c + int(COL_OFF[heading])):
        return heading
    if not free_octants(grid, r, c):
        raise TrappedError(f"agent at ({r}, {c}) has no passable neighbour")
    while True:
        k = int(rng.integers(8))
        if grid.is_free(r + int(ROW_OFF[k]), c + int(COL_OFF[k])):
            return k


class RandomAgent:
    """Stateless policy wrapper around :func:`random_step`."""

    name = "random"

    def __init__(self, seed: int = 0):
        self._rng = component_rng(seed, COMP_PLANNER)

    def reset(self, env: CleaningEnv):
        pass

    def __call__(self, env: CleaningEnv) -> int:
        s = env.state
        return random_step(env.grid, s.row, s.col, s.heading, self._rng)


def bfs_path(grid: GridMap, src: tuple[int, int], dst: tuple[int, int]) -> list[int] | None:
    """Shortest 8-connected action sequence through free cells, or None."""
    if src == dst:
        return []
    h, w = grid.height, grid.width
    prev_action = np.full((h, w), -1, dtype=np.int64)
    prev_cell = np.full((h, w, 2), -1, dtype=np.int64)
    seen = np.zeros((h, w), dtype=bool)
    seen[src] = True
    frontier = [src]
    while frontier:
        nxt = []
        for (r, c) in frontier:
            for k in range(8):
                tr, tc = r + int(ROW_OFF[k]), c + int(COL_OFF[k])
                if not grid.is_free(tr, tc) or seen[tr, tc]:
                    continue
                seen[tr, tc] = True
                prev_action[tr, tc] = k
                prev_cell[tr, tc] = (r, c)
                if (tr, tc) == dst:
                    actions = []
                    cur = dst
                    while cur != src:
                        actions.append(int(prev_action[cur]))
                        cur = (int(prev_cell[cur][0]), int(prev_cell[cur][1]))
                    actions.reverse()
                    return actions
                nxt.append((tr, tc))
        frontier = nxt
    return None


def zigzag_plan(grid: GridMap, start: tuple[int, int] | None = None) -> list[int]:
    """Action sequence sweeping every free cell in boustrophedon row order.

    Raises UnreachableError when some free cell cannot be reached from the
    start through free cells.
    """
    if start is None:
        start = grid.start if grid.start is not None else grid.first_free()
    order = []
    for r in range(grid.height):
        cols = range(grid.width) if r % 2 == 0 else range(grid.width - 1, -1, -1)
        for c in cols:
            if grid.is_free(r, c) and (r, c) != start:
                order.append((r, c))
    actions: list[int] = []
    pos = start
    for target in order:
        leg = bfs_path(grid, pos, target)
        if leg is None:
            raise UnreachableError(f"free cell {target} unreachable from {pos}")
        actions.extend(leg)
        pos = target
    return actions


class ZigzagAgent:
    """Replays a precomputed serpentine plan."""

    name = "zigzag"

    def __init__(self, seed: int = 0):
        self._plan: list[int] = []
        self._i = 0

    def reset(self, env: CleaningEnv):
        s = env.state
        self._plan = zigzag_plan(env.grid, (s.row, s.col))
        self._i = 0

    def __call__(self, env: CleaningEnv) -> int:
        if self._i >= len(self._plan):
            raise UnreachableError("zigzag plan exhausted before episode finished")
        a = self._plan[self._i]
        self._i += 1
        return a
