"""Observation encoders: fixed-size local view and full-grid global view.

The local encoding is what lets one policy run on any map size: 8 prospective
octant rewards, optionally the direction + distance of the nearest uncleaned
tile (found by breadth-first search through free cells), optionally a one-hot
of the current heading.  The global encoding is a per-tile (x, y, reward)
triplet list whose length is tied to the map, so policies trained on it
cannot transfer across sizes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels as K
from .world import CleaningEnv, GridMap

MODE_LOCAL = "local"
MODE_GLOBAL = "global"
_MODE_CODE = {MODE_LOCAL: 0, MODE_GLOBAL: 1}


def local_window(grid: GridMap, cleaned: np.ndarray, r: int, c: int) -> np.ndarray:
    """Prospective reward of each octant neighbour scaled by 0.5 (values 0, -0.5, -1)."""
    out = np.empty(8)
    K.local_window(grid.obstacle, cleaned, r, c, out)
    return out


def nearest_uncleaned(grid: GridMap, cleaned: np.ndarray, r: int, c: int) -> tuple[int, int, int]:
    """(dr, dc, bfs_distance) to the closest reachable uncleaned cell.

    Distance counts 8-connected hops through free cells.  Returns
    (0, 0, -1) when every reachable cell is already cleaned.  Ties break
    toward the row-major-first cell of the winning ring.
    """
    dr, dc, d = K.bfs_nearest(grid.obstacle, cleaned, r, c)
    return int(dr), int(dc), int(d)


@dataclass(frozen=True)
class ObservationSpec:
    """Which encoding to produce and which optional blocks to include."""

    mode: str = MODE_LOCAL
    include_dnut: bool = True
    include_heading: bool = True
    dnut_cap: float = 40.0

    def __post_init__(self):
        if self.mode not in _MODE_CODE:
            raise ValueError(f"mode must be one of {sorted(_MODE_CODE)}, got {self.mode!r}")
        if self.dnut_cap <= 0:
            raise ValueError("dnut_cap must be positive")

    @property
    def mode_code(self) -> int:
        return _MODE_CODE[self.mode]

    def size(self, grid: GridMap) -> int:
        """Vector length this spec produces for the given map."""
        if self.mode == MODE_GLOBAL:
            return grid.height * grid.width * 3
        return 8 + (3 if self.include_dnut else 0) + (8 if self.include_heading else 0)

    def encode_state(self, grid: GridMap, cleaned: np.ndarray,
                     r: int, c: int, heading: int) -> np.ndarray:
        out = np.empty(self.size(grid))
        if self.mode == MODE_GLOBAL:
            K.encode_global(grid.obstacle, cleaned, r, c, out)
        else:
            K.encode_local(grid.obstacle, cleaned, r, c, heading,
                           self.include_dnut, self.include_heading,
                           self.dnut_cap, out)
        return out

    def encode(self, env: CleaningEnv) -> np.ndarray:
        s = env.state
        return self.encode_state(env.grid, env.cleaned, s.row, s.col, s.heading)
