"""Deterministic per-component RNG fan-out.

Every stochastic component (weight init, rollout sampling, minibatch
shuffling, exploration, replay sampling, planners, start cells) gets its own
generator derived from (seed, component id), so adding draws to one component
never perturbs another and runs with equal seeds are reproducible bit for bit.
"""

from __future__ import annotations

import numpy as np

COMP_INIT = 0
COMP_ROLLOUT = 1
COMP_SHUFFLE = 2
COMP_EXPLORE = 3
COMP_REPLAY = 4
COMP_PLANNER = 5
COMP_START = 6


def component_rng(seed: int, component: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(component)]))
