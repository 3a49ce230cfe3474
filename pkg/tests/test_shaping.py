"""Streak-bonus reward shaping and elite-episode filtering.

The two cumulative-value checks (7.125 bonus over three good steps, 0.0
shaped total over three revisits) are hand arithmetic:
    1.5^1 + 1.5^2 + 1.5^3 = 1.5 + 2.25 + 3.375 = 7.125
    (-1 + 1.5^0) * 3      = 0
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sweeprl import (
    EliteConfig,
    EpisodeVerdict,
    ShapingConfig,
    StackState,
    elite_filter,
    shape_episode,
    shaped_step,
)


class TestShapedStep:
    def test_streak_grows_exponentially(self):
        cfg = ShapingConfig(base=1.5)
        stack = StackState()
        bonuses = [shaped_step(0.0, 0.0, stack, cfg)[1] for _ in range(3)]
        assert bonuses == [1.5, 2.25, 3.375]
        assert abs(sum(bonuses) - 7.125) < 1e-12

    def test_three_revisits_shape_to_zero(self):
        cfg = ShapingConfig(base=1.5)
        stack = StackState()
        total = sum(shaped_step(-1.0, 0.0, stack, cfg)[0] for _ in range(3))
        assert abs(total) < 1e-12  # each step: -1 + 1.5^0 = 0

    def test_negative_tile_resets_streak(self):
        cfg = ShapingConfig(base=1.5)
        stack = StackState()
        shaped_step(0.0, 0.0, stack, cfg)
        shaped_step(0.0, 0.0, stack, cfg)
        assert stack.count == 2
        _, bonus = shaped_step(-1.0, 0.0, stack, cfg)
        assert stack.count == 0 and bonus == 1.0
        _, bonus = shaped_step(0.0, 0.0, stack, cfg)
        assert bonus == 1.5  # streak restarts from one

    def test_rotation_does_not_break_streak_by_default(self):
        cfg = ShapingConfig(base=1.5)
        stack = StackState()
        shaped_step(0.0, -2.0, stack, cfg)  # fresh tile, half turn
        assert stack.count == 1
        shaped, bonus = shaped_step(0.0, -0.5, stack, cfg)
        assert stack.count == 2
        assert bonus == 2.25
        assert shaped == 0.0 - 0.5 + 2.25

    def test_include_rotation_keys_on_the_sum(self):
        cfg = ShapingConfig(base=1.5, include_rotation=True)
        stack = StackState()
        shaped_step(0.0, -0.5, stack, cfg)  # 0 - 0.5 < 0 now breaks the streak
        assert stack.count == 0

    def test_disabled_contributes_nothing(self):
        cfg = ShapingConfig(enabled=False)
        stack = StackState()
        shaped, bonus = shaped_step(0.0, -0.5, stack, cfg)
        assert bonus == 0.0
        assert shaped == -0.5
        assert stack.count == 1  # streak still tracked, just unpaid

    def test_bad_base_rejected(self):
        with pytest.raises(ValueError):
            ShapingConfig(base=0.0)
        with pytest.raises(ValueError):
            ShapingConfig(base=-1.5)


class TestShapeEpisode:
    def test_matches_stepwise_application(self):
        rng = np.random.default_rng(3)
        tiles = rng.choice([0.0, -1.0, -2.0], size=40)
        rots = rng.choice([0.0, -0.5, -1.0, -1.5, -2.0], size=40)
        cfg = ShapingConfig(base=1.5)
        got = shape_episode(tiles, rots, cfg)
        stack = StackState()
        want = [shaped_step(t, r, stack, cfg)[0] for t, r in zip(tiles, rots)]
        assert got == want

    def test_worked_three_step_example(self):
        cfg = ShapingConfig(base=1.5)
        shaped = shape_episode([0.0, 0.0, 0.0], [0.0, 0.0, 0.0], cfg)
        assert abs(sum(shaped) - 7.125) < 1e-12

    @settings(max_examples=200, deadline=None)
    @given(
        tiles=st.lists(st.sampled_from([0.0, -1.0, -2.0]), min_size=1, max_size=50),
        base=st.floats(1.0, 3.0),
    )
    def test_bonus_is_base_to_streak_length(self, tiles, base):
        """Property: at every step the paid bonus equals base**(current streak)."""
        cfg = ShapingConfig(base=base)
        stack = StackState()
        streak = 0
        for t in tiles:
            shaped, bonus = shaped_step(t, 0.0, stack, cfg)
            streak = streak + 1 if t >= 0 else 0
            assert stack.count == streak
            assert bonus == base ** streak
            assert shaped == t + bonus


class TestEliteFilter:
    def test_finished_episode_is_kept(self):
        v = elite_filter(done=True, cfg=EliteConfig())
        assert v == EpisodeVerdict(kept=True, truncated=False)

    def test_truncated_episode_is_dropped(self):
        v = elite_filter(done=False, cfg=EliteConfig())
        assert v == EpisodeVerdict(kept=False, truncated=True)

    def test_keep_truncated_overrides_the_drop(self):
        v = elite_filter(done=False, cfg=EliteConfig(keep_truncated=True))
        assert v == EpisodeVerdict(kept=True, truncated=True)

    def test_default_cap_is_five_hundred(self):
        assert EliteConfig().max_steps == 500

    def test_bad_config_rejected(self):
        with pytest.raises(ValueError):
            EliteConfig(max_steps=0)
        with pytest.raises(ValueError):
            EliteConfig(replay_best=-1)
