"""Reward shaping by exponential streak bonus, plus episode-quality filtering.

Shaping: each step whose keyed reward is non-negative grows a streak counter
and earns a bonus of base**streak (so 1.5, 2.25, 3.375, ... for base 1.5); a
negative keyed reward resets the streak and the bonus degenerates to
base**0 == 1.  By default the key is the tile reward alone, so rotations do
not break a streak; set include_rotation to key on tile + rotation instead.

Filtering: episodes that hit the step cap without finishing are dropped from
learning updates ("elite" episodes are the ones that finished).  Optionally
the best K finished episodes can be replayed into later updates.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ShapingConfig:
    enabled: bool = True
    base: float = 1.5
    include_rotation: bool = False

    def __post_init__(self):
        if self.base <= 0:
            raise ValueError("shaping base must be positive")


@dataclass
class StackState:
    """Mutable streak counter threaded through an episode."""

    count: int = 0

    def reset(self):
        self.count = 0


def shaped_step(tile_reward: float, rotation_reward: float,
                stack: StackState, cfg: ShapingConfig) -> tuple[float, float]:
    """Apply one step of streak shaping; mutates `stack`.

    Returns (shaped_reward, bonus) where
    shaped_reward = tile_reward + rotation_reward + bonus.
    """
    keyed = tile_reward + rotation_reward if cfg.include_rotation else tile_reward
    if keyed >= 0.0:
        stack.count += 1
    else:
        stack.count = 0
    bonus = cfg.base ** stack.count if cfg.enabled else 0.0
    return tile_reward + rotation_reward + bonus, bonus


def shape_episode(tile_rewards, rotation_rewards, cfg: ShapingConfig):
    """Shaped reward sequence for a whole episode (fresh streak)."""
    stack = StackState()
    return [shaped_step(t, r, stack, cfg)[0]
            for t, r in zip(tile_rewards, rotation_rewards)]


@dataclass(frozen=True)
class EliteConfig:
    """Step cap and what to do with episodes that hit it."""

    max_steps: int = 500
    keep_truncated: bool = False
    replay_best: int = 0  # replay the best K finished episodes each update (0 = off)

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if self.replay_best < 0:
            raise ValueError("replay_best must be >= 0")


@dataclass(frozen=True)
class EpisodeVerdict:
    kept: bool
    truncated: bool


def elite_filter(done: bool, cfg: EliteConfig) -> EpisodeVerdict:
    """Decide whether an episode feeds the next learning update."""
    truncated = not done
    return EpisodeVerdict(kept=done or cfg.keep_truncated, truncated=truncated)
