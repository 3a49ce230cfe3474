"""Deep Q-learning with replay memory, a frozen target network and an
epsilon-greedy behaviour policy; optional dueling value/advantage head.

Updates run after every episode (one gradient step per `train_every`
environment steps taken), sampling uniformly from replay and regressing
Q(s, a) onto r + gamma * max_a' Q_target(s', a') under a Huber loss (squared
loss behind a flag).  Only kept episodes feed the replay memory; rewards are
stored raw and divided by the running return scale when targets are built,
so every batch is scaled consistently no matter when its transitions were
collected.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels as K
from .errors import InsufficientSamplesError
from .metrics import MetricsRecord
from .neural import AdamState, NetSpec, check_params, init_params
from .normalize import ReturnScaler
from .percept import ObservationSpec
from .seeding import (COMP_EXPLORE, COMP_INIT, COMP_REPLAY, COMP_START,
                      component_rng)
from .shaping import EliteConfig, ShapingConfig, elite_filter
from .world import DEFAULT_HEADING, GridMap


@dataclass(frozen=True)
class DqnConfig:
    gamma: float = 0.99
    learning_rate: float = 1e-3
    batch_size: int = 64
    replay_capacity: int = 50_000
    min_replay: int = 1_000
    target_sync: int = 1_000
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay_steps: int = 20_000
    train_every: int = 1
    use_huber: bool = True
    # Off by default: dividing by the running return std (huge once streak
    # bonuses appear) flattens the ordinary +/-1 rewards the greedy policy is
    # built from, and the Huber loss already bounds the gradient scale.  When
    # enabled, replay keeps raw rewards and the division happens at target
    # time so one batch never mixes scales.
    scale_rewards: bool = False

    def __post_init__(self):
        if self.replay_capacity < self.batch_size:
            raise ValueError("replay_capacity must be >= batch_size")
        if not 0.0 <= self.eps_end <= self.eps_start <= 1.0:
            raise ValueError("need 0 <= eps_end <= eps_start <= 1")
        if self.train_every < 1 or self.target_sync < 1:
            raise ValueError("train_every and target_sync must be >= 1")


def td_target(reward, max_next_q, done, gamma: float):
    """Bootstrapped regression target r + gamma * maxQ' * (1 - done)."""
    reward = np.asarray(reward, dtype=np.float64)
    max_next_q = np.asarray(max_next_q, dtype=np.float64)
    done = np.asarray(done, dtype=np.float64)
    return reward + gamma * max_next_q * (1.0 - done)


def dueling_merge(value, advantages):
    """Q_k = V + A_k - mean(A); broadcasting over leading batch dims."""
    advantages = np.asarray(advantages, dtype=np.float64)
    value = np.asarray(value, dtype=np.float64)
    return value[..., None] + advantages - advantages.mean(axis=-1, keepdims=True)


class ReplayMemory:
    """Fixed-capacity ring buffer of (s, a, r, s', done) transitions."""

    def __init__(self, capacity: int, obs_size: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = int(capacity)
        self.s = np.empty((capacity, obs_size))
        self.a = np.empty(capacity, dtype=np.int64)
        self.r = np.empty(capacity)
        self.s2 = np.empty((capacity, obs_size))
        self.d = np.empty(capacity)
        self._pos = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def push_batch(self, s, a, r, s2, d):
        n = s.shape[0]
        if n == 0:
            return
        if n > self.capacity:  # only the most recent transitions can survive
            s, a, r, s2, d = (x[-self.capacity:] for x in (s, a, r, s2, d))
            n = self.capacity
        idx = (self._pos + np.arange(n)) % self.capacity
        self.s[idx] = s
        self.a[idx] = a
        self.r[idx] = r
        self.s2[idx] = s2
        self.d[idx] = d
        self._pos = int((self._pos + n) % self.capacity)
        self.size = min(self.size + n, self.capacity)

    def sample(self, batch: int, rng: np.random.Generator):
        if self.size < batch:
            raise InsufficientSamplesError(
                f"replay holds {self.size} transitions, need {batch}")
        idx = rng.integers(self.size, size=batch)
        return (np.ascontiguousarray(self.s[idx]), self.a[idx], self.r[idx],
                np.ascontiguousarray(self.s2[idx]), self.d[idx])


class DqnTrainer:
    """Q-learning loop sharing the rollout/filter/metrics plumbing of PPO."""

    def __init__(self, grid: GridMap, obs_spec: ObservationSpec | None = None,
                 config: DqnConfig | None = None, net: NetSpec | None = None,
                 shaping: ShapingConfig | None = None, elite: EliteConfig | None = None,
                 seed: int = 0, dueling: bool = False, random_start: bool = False):
        self.grid = grid
        self.obs_spec = obs_spec or ObservationSpec()
        self.config = config or DqnConfig()
        self.shaping = shaping or ShapingConfig()
        self.elite = elite or EliteConfig()
        self.seed = int(seed)
        self.random_start = random_start
        obs_size = self.obs_spec.size(grid)
        if net is None:
            net = NetSpec(obs_size, (64, 64), "dueling" if dueling else "q")
        if net.head == "pv":
            raise ValueError("DQN needs a q or dueling head")
        if net.input_size != obs_size:
            raise ValueError(f"net input {net.input_size} != observation size {obs_size}")
        self.net = net
        self.flat = init_params(net, component_rng(self.seed, COMP_INIT))
        self.target_flat = self.flat.copy()
        self.adam = AdamState.for_params(self.flat)
        self._explore_rng = component_rng(self.seed, COMP_EXPLORE)
        self._replay_rng = component_rng(self.seed, COMP_REPLAY)
        self._start_rng = component_rng(self.seed, COMP_START)
        self.replay = ReplayMemory(self.config.replay_capacity, obs_size)
        self.scaler = ReturnScaler(self.config.gamma, enabled=self.config.scale_rewards)
        self.records: list[MetricsRecord] = []
        self.episodes_run = 0
        self.env_steps = 0
        self.grad_steps = 0
        self.last_loss = float("nan")
        cap = self.elite.max_steps
        self._obs_buf = np.empty((cap + 1, obs_size))
        self._act_buf = np.empty(cap, dtype=np.int64)
        self._rew_buf = np.empty(cap)
        self._tile_buf = np.empty(cap)
        self._rot_buf = np.empty(cap)

    def _start_cell(self) -> tuple[int, int]:
        if self.random_start:
            rows, cols = np.nonzero(~self.grid.obstacle)
            i = int(self._start_rng.integers(rows.shape[0]))
            return int(rows[i]), int(cols[i])
        if self.grid.start is not None:
            return self.grid.start
        return self.grid.first_free()

    def _roll(self, greedy: bool, max_steps: int | None = None):
        cap = max_steps or self.elite.max_steps
        if cap + 1 > self._obs_buf.shape[0]:
            obs_size = self._obs_buf.shape[1]
            self._obs_buf = np.empty((cap + 1, obs_size))
            self._act_buf = np.empty(cap, dtype=np.int64)
            self._rew_buf = np.empty(cap)
            self._tile_buf = np.empty(cap)
            self._rot_buf = np.empty(cap)
        r0, c0 = self._start_cell()
        cleaned = np.zeros(self.grid.obstacle.shape, dtype=np.bool_)
        cleaned[r0, c0] = True
        remaining = self.grid.free_count - 1
        u_explore = self._explore_rng.random(cap)
        u_action = self._explore_rng.random(cap)
        sp = self.obs_spec
        sh = self.shaping
        cfg = self.config
        return K.collect_episode_q(
            self.grid.obstacle, cleaned, r0, c0, int(DEFAULT_HEADING), remaining,
            self.flat, self.net.sizes, self.net.head_kind,
            sp.mode_code, sp.include_dnut, sp.include_heading, sp.dnut_cap,
            sh.enabled, sh.base, sh.include_rotation,
            cap, cfg.eps_start, cfg.eps_end, cfg.eps_decay_steps, self.env_steps,
            u_explore, u_action, greedy,
            self._obs_buf, self._act_buf, self._rew_buf,
            self._tile_buf, self._rot_buf)

    def _make_record(self, t, dist, rot, wall, base, shaped, remaining) -> MetricsRecord:
        free = self.grid.free_count
        return MetricsRecord(
            episode=self.episodes_run, steps=int(t),
            coverage=(free - int(remaining)) / free,
            distance_m=float(dist), rotation_units=int(rot),
            base_reward=float(base), shaped_reward=float(shaped),
            wall_hits=int(wall), seed=self.seed)

    def epsilon(self) -> float:
        cfg = self.config
        if cfg.eps_decay_steps <= 0:
            return cfg.eps_end
        frac = min(1.0, self.env_steps / cfg.eps_decay_steps)
        return cfg.eps_start + (cfg.eps_end - cfg.eps_start) * frac

    def run_episode(self) -> MetricsRecord:
        """One behaviour episode; kept episodes feed replay, updates always run."""
        (t, done, _r, _c, _h, remaining, dist, rot, wall,
         base, shaped) = self._roll(greedy=False)
        rec = self._make_record(t, dist, rot, wall, base, shaped, remaining)
        self.records.append(rec)
        self.episodes_run += 1
        self.env_steps += int(t)
        verdict = elite_filter(bool(done), self.elite)
        if verdict.kept and t > 0:
            dones = np.zeros(t)
            if done:
                dones[-1] = 1.0
            self.scaler.update(self._rew_buf[:t], bool(done))
            self.replay.push_batch(
                self._obs_buf[:t].copy(), self._act_buf[:t].copy(),
                self._rew_buf[:t].copy(),
                self._obs_buf[1:t + 1].copy(), dones)
        self._learn(int(t))
        return rec

    def _learn(self, env_steps: int):
        cfg = self.config
        need = max(cfg.batch_size, cfg.min_replay)
        if len(self.replay) < need:
            return
        inv_scale = 1.0 / self.scaler.scale
        for _ in range(max(1, env_steps // cfg.train_every)):
            s, a, r, s2, d = self.replay.sample(cfg.batch_size, self._replay_rng)
            targets = K.q_targets_batch(self.target_flat, self.net.sizes,
                                        self.net.head_kind, s2, r * inv_scale, d, cfg.gamma)
            out = K.dqn_minibatch_step(
                self.flat, self.adam.m, self.adam.v, self.adam.t,
                self.net.sizes, self.net.head_kind, s, a, targets,
                cfg.use_huber, cfg.learning_rate,
                self.adam.beta1, self.adam.beta2, self.adam.eps)
            self.adam.t = int(out[0])
            self.last_loss = float(out[1])
            self.grad_steps += 1
            if self.grad_steps % cfg.target_sync == 0:
                self.target_flat[:] = self.flat

    def train(self, episodes: int) -> list[MetricsRecord]:
        start = len(self.records)
        for _ in range(int(episodes)):
            self.run_episode()
        return self.records[start:]

    def evaluate(self, episodes: int = 1, greedy: bool = True,
                 max_steps: int | None = None) -> list[MetricsRecord]:
        out = []
        for _ in range(int(episodes)):
            (t, _done, _r, _c, _h, remaining, dist, rot, wall,
             base, shaped) = self._roll(greedy=greedy, max_steps=max_steps)
            out.append(self._make_record(t, dist, rot, wall, base, shaped, remaining))
        return out

    def act(self, obs: np.ndarray, greedy: bool = True) -> int:
        if not greedy and self._explore_rng.random() < self.epsilon():
            return int(self._explore_rng.integers(8))
        q = K.q_forward_single(self.flat, self.net.sizes, self.net.head_kind,
                               np.ascontiguousarray(obs, dtype=np.float64))
        return int(np.argmax(q))

    def load_params(self, flat: np.ndarray):
        self.flat[:] = check_params(self.net, flat)
        self.target_flat[:] = self.flat
