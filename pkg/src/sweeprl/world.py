"""Grid world for coverage cleaning: map container, agent state, step rules.

The environment is deterministic.  An action is one of eight compass octants;
the agent first rotates to face that octant (each 45-degree increment costs
-0.5 reward) and then tries to advance one cell.  Entering a fresh cell pays
0, re-entering a cleaned cell pays -1, and bumping a wall or obstacle pays -2
while leaving the agent in place.  The episode ends when every free cell has
been cleaned.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import kernels as K
from .errors import EpisodeFinishedError, NoFreeCellError


class Heading(enum.IntEnum):
    """Compass octants; rows grow downward so N is row - 1."""

    N = 0
    NE = 1
    E = 2
    SE = 3
    S = 4
    SW = 5
    W = 6
    NW = 7


#: (row, col) displacement for each octant, indexed by Heading value.
ROW_OFF = K.ROW_OFF
COL_OFF = K.COL_OFF

#: Metres travelled by one axis-aligned / diagonal move (0.5 m tile pitch).
TILE_SIDE = K.TILE_SIDE
DIAG_SIDE = K.DIAG_SIDE

#: Default heading after reset.  Facing east means a planner sweeping the top
#: row rightward pays no rotation on its first move.
DEFAULT_HEADING = Heading.E


def rotation_units(a: int, b: int) -> int:
    """Number of 45-degree increments along the shorter arc from a to b."""
    return int(K.rotation_units(a, b))


def rotation_cost(a: int, b: int) -> float:
    """Positive rotation penalty magnitude: 0.5 per 45-degree increment."""
    return 0.5 * rotation_units(a, b)


def rotation_reward(a: int, b: int) -> float:
    """Reward contribution of rotating from octant a to b (non-positive)."""
    return -rotation_cost(a, b)


def move_distance(action: int) -> float:
    """Metres covered by a successful move along the given octant."""
    if ROW_OFF[action] != 0 and COL_OFF[action] != 0:
        return DIAG_SIDE
    return TILE_SIDE


@dataclass(frozen=True)
class GridMap:
    """Static map: boolean obstacle mask plus an optional fixed start cell."""

    obstacle: np.ndarray
    start: tuple[int, int] | None = None

    def __post_init__(self):
        obs = np.ascontiguousarray(self.obstacle, dtype=np.bool_)
        if obs.ndim != 2 or obs.shape[0] < 1 or obs.shape[1] < 1:
            raise ValueError(f"obstacle mask must be 2-D and non-empty, got shape {obs.shape}")
        obs.setflags(write=False)
        object.__setattr__(self, "obstacle", obs)
        if not (~obs).any():
            raise NoFreeCellError("map has no free cell")
        if self.start is not None:
            r, c = self.start
            if not self.in_bounds(r, c):
                raise ValueError(f"start {self.start} is outside the {obs.shape} grid")
            if obs[r, c]:
                raise ValueError(f"start {self.start} sits on an obstacle")
            object.__setattr__(self, "start", (int(r), int(c)))

    @property
    def height(self) -> int:
        return self.obstacle.shape[0]

    @property
    def width(self) -> int:
        return self.obstacle.shape[1]

    @property
    def free_count(self) -> int:
        return int((~self.obstacle).sum())

    def in_bounds(self, r: int, c: int) -> bool:
        return 0 <= r < self.height and 0 <= c < self.width

    def is_free(self, r: int, c: int) -> bool:
        return self.in_bounds(r, c) and not self.obstacle[r, c]

    def first_free(self) -> tuple[int, int]:
        rows, cols = np.nonzero(~self.obstacle)
        return int(rows[0]), int(cols[0])

    @classmethod
    def open_room(cls, height: int, width: int, start: tuple[int, int] | None = (0, 0)) -> "GridMap":
        """Convenience constructor for an obstacle-free rectangle."""
        return cls(np.zeros((height, width), dtype=np.bool_), start=start)


@dataclass
class AgentState:
    row: int
    col: int
    heading: int


@dataclass
class StepOutcome:
    """Everything one env.step produced."""

    reward: float
    tile_reward: float
    rotation_reward: float
    rotation_units: int
    distance: float
    moved: bool
    newly_cleaned: bool
    done: bool
    state: AgentState = field(repr=False)


class CleaningEnv:
    """Stateful episode runner over a :class:`GridMap`.

    reset() places the agent (grid start cell, else the first free cell,
    else uniformly random when ``random_start`` is set), marks that cell
    cleaned, and points the agent at ``DEFAULT_HEADING``.  The episode is
    done once ``remaining`` hits zero; further step() calls raise
    :class:`EpisodeFinishedError`.
    """

    def __init__(self, grid: GridMap, random_start: bool = False,
                 rng: np.random.Generator | None = None):
        self.grid = grid
        self.random_start = random_start
        self._rng = rng if rng is not None else np.random.default_rng(0)
        self.cleaned = np.zeros(grid.obstacle.shape, dtype=np.bool_)
        self.state = AgentState(0, 0, int(DEFAULT_HEADING))
        self.remaining = 0
        self.steps = 0
        self.distance_total = 0.0
        self.rotation_total = 0
        self.wall_hits = 0
        self._started = False
        self.reset()

    def _start_cell(self) -> tuple[int, int]:
        if self.random_start:
            rows, cols = np.nonzero(~self.grid.obstacle)
            i = int(self._rng.integers(rows.shape[0]))
            return int(rows[i]), int(cols[i])
        if self.grid.start is not None:
            return self.grid.start
        return self.grid.first_free()

    def reset(self) -> AgentState:
        r, c = self._start_cell()
        self.cleaned = np.zeros(self.grid.obstacle.shape, dtype=np.bool_)
        self.cleaned[r, c] = True
        self.state = AgentState(r, c, int(DEFAULT_HEADING))
        self.remaining = self.grid.free_count - 1
        self.steps = 0
        self.distance_total = 0.0
        self.rotation_total = 0
        self.wall_hits = 0
        self._started = True
        return self.state

    @property
    def done(self) -> bool:
        return self.remaining == 0

    @property
    def coverage(self) -> float:
        return float((self.cleaned & ~self.grid.obstacle).sum()) / self.grid.free_count

    def step(self, action: int) -> StepOutcome:
        if self.done:
            raise EpisodeFinishedError("episode already finished; call reset()")
        action = int(action)
        if not 0 <= action <= 7:
            raise ValueError(f"action must be an octant 0..7, got {action}")
        s = self.state
        tile, rot_r, units, moved, nr, nc, dist, newly = K.env_step(
            self.grid.obstacle, self.cleaned, s.row, s.col, s.heading, action)
        s.row, s.col, s.heading = int(nr), int(nc), action
        if newly:
            self.remaining -= 1
        if not moved:
            self.wall_hits += 1
        self.steps += 1
        self.distance_total += float(dist)
        self.rotation_total += int(units)
        return StepOutcome(
            reward=float(tile) + float(rot_r),
            tile_reward=float(tile),
            rotation_reward=float(rot_r),
            rotation_units=int(units),
            distance=float(dist),
            moved=bool(moved),
            newly_cleaned=bool(newly),
            done=self.done,
            state=s,
        )
