"""Running reward scaling for learners.

The streak shaping bonus grows exponentially (base**stack), so episode
returns span several orders of magnitude and sit far outside what a small
network can regress onto within a training budget.  The usual remedy is to
scale learning rewards by a running standard deviation of the discounted
return; metrics always report unscaled rewards.
"""

from __future__ import annotations

import math

import numpy as np


class ReturnScaler:
    """Divides rewards by the running std of the discounted return.

    Keeps a discounted return accumulator across steps (reset on done) and
    Welford statistics of its value at every step; `update` folds in one
    episode and returns that episode's rewards divided by the current std.
    Purely deterministic given the reward stream.
    """

    def __init__(self, gamma: float, enabled: bool = True, floor: float = 1e-4):
        self.gamma = float(gamma)
        self.enabled = enabled
        self.floor = float(floor)
        self._ret = 0.0
        self._count = 0
        self._mean = 0.0
        self._m2 = 0.0

    @property
    def scale(self) -> float:
        if self._count < 2:
            return 1.0
        return max(math.sqrt(self._m2 / self._count), self.floor)

    def update(self, rewards: np.ndarray, done: bool) -> np.ndarray:
        """Fold one episode into the statistics; return scaled rewards."""
        rewards = np.asarray(rewards, dtype=np.float64)
        if not self.enabled:
            return rewards.copy()
        for r in rewards:
            self._ret = r + self.gamma * self._ret
            self._count += 1
            delta = self._ret - self._mean
            self._mean += delta / self._count
            self._m2 += delta * (self._ret - self._mean)
        if done:
            self._ret = 0.0
        return rewards / self.scale
