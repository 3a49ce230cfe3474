"""Observation encoders: local window, nearest-uncleaned search, global grid.

The nearest-uncleaned search is validated against an independent queue-based
breadth-first-search oracle, including its tie-break rule (row-major-first
cell of the closest ring).
"""

import collections
import math

import numpy as np
import pytest

from sweeprl import CleaningEnv, GridMap, Heading, local_window, nearest_uncleaned
from sweeprl.percept import MODE_GLOBAL, MODE_LOCAL, ObservationSpec
from sweeprl.world import COL_OFF, ROW_OFF


def bfs_oracle(obstacle: np.ndarray, cleaned: np.ndarray, r: int, c: int):
    """Layered BFS over free cells; first uncleaned hit in row-major order wins."""
    h, w = obstacle.shape
    dist = -np.ones((h, w), dtype=int)
    dist[r, c] = 0
    frontier = [(r, c)]
    d = 0
    while frontier:
        # Row-major scan of the current layer for uncleaned cells.
        hits = sorted((rr, cc) for rr, cc in frontier if not cleaned[rr, cc])
        if hits:
            hr, hc = hits[0]
            return hr - r, hc - c, d
        nxt = set()
        for rr, cc in frontier:
            for k in range(8):
                nr, nc = rr + int(ROW_OFF[k]), cc + int(COL_OFF[k])
                if 0 <= nr < h and 0 <= nc < w and not obstacle[nr, nc] and dist[nr, nc] < 0:
                    dist[nr, nc] = d + 1
                    nxt.add((nr, nc))
        frontier = list(nxt)
        d += 1
    return 0, 0, -1


class TestLocalWindow:
    def test_corner_of_empty_room(self):
        g = GridMap.open_room(4, 4)
        cleaned = np.zeros((4, 4), dtype=bool)
        cleaned[0, 0] = True
        win = local_window(g, cleaned, 0, 0)
        # Octants N, NE, NW, W, SW point off the board (-1 after scaling);
        # E, SE, S are fresh (0).
        want = {Heading.N: -1.0, Heading.NE: -1.0, Heading.E: 0.0, Heading.SE: 0.0,
                Heading.S: 0.0, Heading.SW: -1.0, Heading.W: -1.0, Heading.NW: -1.0}
        for k, v in want.items():
            assert win[k] == v, k

    def test_cleaned_neighbour_is_minus_half(self):
        g = GridMap.open_room(3, 3)
        cleaned = np.zeros((3, 3), dtype=bool)
        cleaned[1, 2] = True
        win = local_window(g, cleaned, 1, 1)
        assert win[Heading.E] == -0.5
        assert win[Heading.W] == 0.0

    def test_obstacle_neighbour_is_minus_one(self):
        obs = np.zeros((3, 3), dtype=bool)
        obs[0, 1] = True
        g = GridMap(obstacle=obs, start=(1, 1))
        win = local_window(g, np.zeros((3, 3), dtype=bool), 1, 1)
        assert win[Heading.N] == -1.0

    def test_values_always_in_reward_alphabet(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            h, w = rng.integers(3, 9, size=2)
            obs = rng.random((h, w)) < 0.25
            obs[0, 0] = False
            g = GridMap(obstacle=obs, start=(0, 0))
            cleaned = (rng.random((h, w)) < 0.5) & ~obs
            r, c = 0, 0
            win = local_window(g, cleaned, r, c)
            assert set(np.unique(win)) <= {0.0, -0.5, -1.0}


class TestNearestUncleaned:
    def test_adjacent_cell(self):
        g = GridMap.open_room(3, 3)
        cleaned = np.zeros((3, 3), dtype=bool)
        cleaned[0, 0] = True
        dr, dc, d = nearest_uncleaned(g, cleaned, 0, 0)
        # (0,1) and (1,0) and (1,1) are all at distance 1; row-major picks (0,1).
        assert (dr, dc, d) == (0, 1, 1)

    def test_distance_counts_hops_not_metres(self):
        g = GridMap.open_room(1, 5)
        cleaned = np.zeros((1, 5), dtype=bool)
        cleaned[0, :4] = True
        dr, dc, d = nearest_uncleaned(g, cleaned, 0, 0)
        assert (dr, dc, d) == (0, 4, 4)

    def test_walls_force_detour(self):
        # A wall splits the room; the only gap is at the bottom row.
        obs = np.zeros((4, 5), dtype=bool)
        obs[:3, 2] = True
        g = GridMap(obstacle=obs, start=(0, 0))
        cleaned = np.ones((4, 5), dtype=bool) & ~obs
        cleaned[0, 4] = False  # target on the far side of the wall
        dr, dc, d = nearest_uncleaned(g, cleaned, 0, 0)
        want = bfs_oracle(obs, cleaned, 0, 0)
        assert (dr, dc, d) == want
        assert d > 4  # strictly longer than the unobstructed chebyshev distance

    def test_unreachable_reports_minus_one(self):
        obs = np.zeros((3, 3), dtype=bool)
        obs[:, 1] = True  # vertical wall, right side unreachable
        g = GridMap(obstacle=obs, start=(0, 0))
        cleaned = np.zeros((3, 3), dtype=bool)
        cleaned[:, 0] = True  # left side fully cleaned
        assert nearest_uncleaned(g, cleaned, 1, 0) == (0, 0, -1)

    def test_own_cell_counts_when_uncleaned(self):
        g = GridMap.open_room(2, 2)
        cleaned = np.zeros((2, 2), dtype=bool)
        assert nearest_uncleaned(g, cleaned, 1, 1) == (0, 0, 0)

    def test_matches_bfs_oracle_on_random_maps(self):
        """200 random maps up to 10x10, random cleaned masks, all agent cells."""
        rng = np.random.default_rng(42)
        agree = 0
        for i in range(200):
            h = int(rng.integers(2, 11))
            w = int(rng.integers(2, 11))
            obs = rng.random((h, w)) < 0.25
            free = np.argwhere(~obs)
            if len(free) == 0:
                obs[0, 0] = False
                free = np.argwhere(~obs)
            g = GridMap(obstacle=obs, start=None)
            cleaned = (rng.random((h, w)) < 0.6) & ~obs
            r, c = free[rng.integers(len(free))]
            got = nearest_uncleaned(g, cleaned, int(r), int(c))
            want = bfs_oracle(obs, cleaned, int(r), int(c))
            assert got == want, (i, got, want)
            agree += 1
        print(f"nearest_uncleaned matched the BFS oracle on {agree}/200 maps")


class TestObservationSpec:
    def test_local_size_is_nineteen_for_any_map(self):
        spec = ObservationSpec(mode=MODE_LOCAL)
        for h, w in [(3, 3), (5, 5), (7, 12), (50, 50)]:
            assert spec.size(GridMap.open_room(h, w)) == 19

    def test_optional_blocks_shrink_the_vector(self):
        g = GridMap.open_room(4, 4)
        assert ObservationSpec(include_dnut=False).size(g) == 16
        assert ObservationSpec(include_heading=False).size(g) == 11
        assert ObservationSpec(include_dnut=False, include_heading=False).size(g) == 8

    def test_global_size_tracks_map_area(self):
        spec = ObservationSpec(mode=MODE_GLOBAL)
        assert spec.size(GridMap.open_room(5, 5)) == 75
        assert spec.size(GridMap.open_room(7, 7)) == 147
        assert spec.size(GridMap.open_room(3, 4)) == 36

    def test_bad_mode_rejected(self):
        with pytest.raises(ValueError):
            ObservationSpec(mode="omniscient")

    def test_bad_cap_rejected(self):
        with pytest.raises(ValueError):
            ObservationSpec(dnut_cap=0.0)

    def test_local_layout(self):
        g = GridMap.open_room(3, 3)
        env = CleaningEnv(g)
        env.reset()
        spec = ObservationSpec()
        vec = spec.encode(env)
        assert vec.shape == (19,)
        np.testing.assert_array_equal(vec[0:8], local_window(g, env.cleaned, 0, 0))
        dr, dc, d = nearest_uncleaned(g, env.cleaned, 0, 0)
        norm = math.hypot(dr, dc)
        assert vec[8] == dr / norm and vec[9] == dc / norm
        assert vec[10] == d / 40.0
        one_hot = vec[11:19]
        assert one_hot[Heading.E] == 1.0 and one_hot.sum() == 1.0

    def test_dnut_distance_saturates_at_cap(self):
        g = GridMap.open_room(1, 50)
        cleaned = np.zeros((1, 50), dtype=bool)
        cleaned[0, :45] = True
        vec = ObservationSpec().encode_state(g, cleaned, 0, 0, Heading.E)
        assert vec[10] == 1.0  # distance 45 clamps to the 40-hop cap

    def test_dnut_on_own_uncleaned_cell_encodes_zeros(self):
        # Distance zero must not blow up the unit-vector normalisation.
        g = GridMap.open_room(3, 3)
        vec = ObservationSpec().encode_state(g, np.zeros((3, 3), dtype=bool), 0, 0, Heading.E)
        np.testing.assert_array_equal(vec[8:11], [0.0, 0.0, 0.0])

    def test_dnut_zeroed_when_everything_cleaned(self):
        g = GridMap.open_room(2, 2)
        cleaned = np.ones((2, 2), dtype=bool)
        vec = ObservationSpec().encode_state(g, cleaned, 0, 0, Heading.N)
        np.testing.assert_array_equal(vec[8:11], [0.0, 0.0, 0.0])

    def test_global_layout(self):
        obs = np.zeros((2, 3), dtype=bool)
        obs[1, 2] = True
        g = GridMap(obstacle=obs, start=(0, 0))
        cleaned = np.zeros((2, 3), dtype=bool)
        cleaned[0, 1] = True
        vec = ObservationSpec(mode=MODE_GLOBAL).encode_state(g, cleaned, 0, 0, Heading.E)
        assert vec.shape == (18,)
        tiles = vec.reshape(2, 3, 3)
        # Normalised x varies with the column, y with the row.
        np.testing.assert_allclose(tiles[:, :, 0], [[0, 0.5, 1], [0, 0.5, 1]])
        np.testing.assert_allclose(tiles[:, :, 1], [[0, 0, 0], [1, 1, 1]])
        # Reward channel: agent +0.5, cleaned -0.5, obstacle -1, fresh 0.
        np.testing.assert_allclose(tiles[:, :, 2], [[0.5, -0.5, 0], [0, 0, -1]])

    def test_encode_matches_encode_state(self):
        env = CleaningEnv(GridMap.open_room(4, 4))
        env.reset()
        env.step(Heading.SE)
        spec = ObservationSpec()
        s = env.state
        np.testing.assert_array_equal(
            spec.encode(env),
            spec.encode_state(env.grid, env.cleaned, s.row, s.col, s.heading),
        )
