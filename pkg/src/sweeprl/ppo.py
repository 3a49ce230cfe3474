"""Proximal policy optimisation with a clipped surrogate objective.

Episodes roll out through the fused kernel driver, pass the elite filter
(finished episodes only, unless configured otherwise), get advantages from
generalized advantage estimation, and update the shared policy/value network
over several shuffled minibatch epochs with Adam.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels as K
from .errors import EmptyBufferError
from .metrics import MetricsRecord
from .neural import AdamState, NetSpec, check_params, init_params
from .normalize import ReturnScaler
from .percept import ObservationSpec
from .seeding import COMP_INIT, COMP_ROLLOUT, COMP_SHUFFLE, COMP_START, component_rng
from .shaping import EliteConfig, ShapingConfig, elite_filter
from .world import DEFAULT_HEADING, GridMap


@dataclass(frozen=True)
class PpoConfig:
    gamma: float = 0.99
    lam: float = 0.95
    clip_eps: float = 0.2
    epochs: int = 4
    minibatch_size: int = 64
    learning_rate: float = 3e-4
    value_coef: float = 0.5
    entropy_coef: float = 0.01
    episodes_per_update: int = 8
    normalize_advantages: bool = True
    scale_rewards: bool = True

    def __post_init__(self):
        if not 0.0 < self.clip_eps < 1.0:
            raise ValueError("clip_eps must lie in (0, 1)")
        if self.epochs < 1 or self.minibatch_size < 1 or self.episodes_per_update < 1:
            raise ValueError("epochs, minibatch_size and episodes_per_update must be >= 1")


def ratio(logp_new, logp_old):
    """Importance ratio exp(logp_new - logp_old); elementwise on arrays."""
    return np.exp(np.asarray(logp_new) - np.asarray(logp_old))


def clipped_term(r, advantage, clip_eps: float):
    """Clipped surrogate objective min(r*A, clip(r, 1-eps, 1+eps)*A)."""
    r = np.asarray(r, dtype=np.float64)
    a = np.asarray(advantage, dtype=np.float64)
    return np.minimum(r * a, np.clip(r, 1.0 - clip_eps, 1.0 + clip_eps) * a)


def compute_gae(rewards, values, dones, gamma: float, lam: float,
                last_value: float = 0.0):
    """Advantages and returns; dones mark where bootstrap chains break."""
    rewards = np.ascontiguousarray(rewards, dtype=np.float64)
    values = np.ascontiguousarray(values, dtype=np.float64)
    dones = np.ascontiguousarray(dones, dtype=np.float64)
    if not rewards.shape == values.shape == dones.shape:
        raise ValueError("rewards, values and dones must share one shape")
    return K.gae_scan(rewards, values, dones, gamma, lam, float(last_value))


@dataclass
class _Episode:
    obs: np.ndarray
    actions: np.ndarray
    logp: np.ndarray
    values: np.ndarray
    rewards: np.ndarray
    done: bool
    last_value: float
    steps: int


class RolloutBuffer:
    """Accumulates kept episodes between policy updates."""

    def __init__(self):
        self._episodes: list[_Episode] = []

    def __len__(self) -> int:
        return len(self._episodes)

    @property
    def steps(self) -> int:
        return sum(e.steps for e in self._episodes)

    def add(self, episode: _Episode):
        self._episodes.append(episode)

    def clear(self):
        self._episodes.clear()

    def concat(self, gamma: float, lam: float, extra: list[_Episode] | None = None):
        """Per-episode GAE, then one concatenated batch (X, a, logp, adv, ret)."""
        episodes = self._episodes + list(extra or [])
        if not episodes:
            raise EmptyBufferError("no episodes collected before update")
        xs, acts, lps, advs, rets = [], [], [], [], []
        for e in episodes:
            dones = np.zeros(e.steps)
            if e.done:
                dones[-1] = 1.0
            adv, ret = compute_gae(e.rewards, e.values, dones, gamma, lam, e.last_value)
            xs.append(e.obs)
            acts.append(e.actions)
            lps.append(e.logp)
            advs.append(adv)
            rets.append(ret)
        return (np.concatenate(xs), np.concatenate(acts), np.concatenate(lps),
                np.concatenate(advs), np.concatenate(rets))


class PpoTrainer:
    """Owns the parameters, rollout buffers and update loop for one map."""

    def __init__(self, grid: GridMap, obs_spec: ObservationSpec | None = None,
                 config: PpoConfig | None = None, net: NetSpec | None = None,
                 shaping: ShapingConfig | None = None, elite: EliteConfig | None = None,
                 seed: int = 0, random_start: bool = False):
        self.grid = grid
        self.obs_spec = obs_spec or ObservationSpec()
        self.config = config or PpoConfig()
        self.shaping = shaping or ShapingConfig()
        self.elite = elite or EliteConfig()
        self.seed = int(seed)
        self.random_start = random_start
        obs_size = self.obs_spec.size(grid)
        if net is None:
            net = NetSpec(obs_size, (64, 64), "pv")
        if net.head != "pv":
            raise ValueError("PPO needs a pv head")
        if net.input_size != obs_size:
            raise ValueError(f"net input {net.input_size} != observation size {obs_size}")
        self.net = net
        self.flat = init_params(net, component_rng(self.seed, COMP_INIT))
        self.adam = AdamState.for_params(self.flat)
        self._rollout_rng = component_rng(self.seed, COMP_ROLLOUT)
        self._shuffle_rng = component_rng(self.seed, COMP_SHUFFLE)
        self._start_rng = component_rng(self.seed, COMP_START)
        self.buffer = RolloutBuffer()
        self.scaler = ReturnScaler(self.config.gamma, enabled=self.config.scale_rewards)
        self.records: list[MetricsRecord] = []
        self.episodes_run = 0
        self.env_steps = 0
        self.updates_done = 0
        self.last_update: dict[str, float] = {}
        self._best: list[_Episode] = []
        cap = self.elite.max_steps
        self._obs_buf = np.empty((cap, obs_size))
        self._act_buf = np.empty(cap, dtype=np.int64)
        self._logp_buf = np.empty(cap)
        self._val_buf = np.empty(cap)
        self._tile_buf = np.empty(cap)
        self._rot_buf = np.empty(cap)
        self._shaped_buf = np.empty(cap)

    # -- rollout ----------------------------------------------------------

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
        if cap > self._obs_buf.shape[0]:
            obs_size = self._obs_buf.shape[1]
            self._obs_buf = np.empty((cap, obs_size))
            self._act_buf = np.empty(cap, dtype=np.int64)
            self._logp_buf = np.empty(cap)
            self._val_buf = np.empty(cap)
            self._tile_buf = np.empty(cap)
            self._rot_buf = np.empty(cap)
            self._shaped_buf = np.empty(cap)
        r0, c0 = self._start_cell()
        cleaned = np.zeros(self.grid.obstacle.shape, dtype=np.bool_)
        cleaned[r0, c0] = True
        remaining = self.grid.free_count - 1
        uniforms = self._rollout_rng.random(cap)
        sp = self.obs_spec
        sh = self.shaping
        return K.collect_episode_pv(
            self.grid.obstacle, cleaned, r0, c0, int(DEFAULT_HEADING), remaining,
            self.flat, self.net.sizes,
            sp.mode_code, sp.include_dnut, sp.include_heading, sp.dnut_cap,
            sh.enabled, sh.base, sh.include_rotation,
            cap, uniforms, greedy,
            self._obs_buf, self._act_buf, self._logp_buf, self._val_buf,
            self._tile_buf, self._rot_buf, self._shaped_buf)

    def _make_record(self, t, dist, rot, wall, base, shaped, remaining) -> MetricsRecord:
        free = self.grid.free_count
        rec = MetricsRecord(
            episode=self.episodes_run, steps=int(t),
            coverage=(free - int(remaining)) / free,
            distance_m=float(dist), rotation_units=int(rot),
            base_reward=float(base), shaped_reward=float(shaped),
            wall_hits=int(wall), seed=self.seed)
        return rec

    def run_episode(self) -> MetricsRecord:
        """One training episode: roll, filter, buffer, maybe update."""
        (t, done, _r, _c, _h, remaining, dist, rot, wall,
         base, shaped, last_value) = self._roll(greedy=False)
        rec = self._make_record(t, dist, rot, wall, base, shaped, remaining)
        self.records.append(rec)
        self.episodes_run += 1
        self.env_steps += int(t)
        verdict = elite_filter(bool(done), self.elite)
        if verdict.kept and t > 0:
            ep = _Episode(
                obs=self._obs_buf[:t].copy(), actions=self._act_buf[:t].copy(),
                logp=self._logp_buf[:t].copy(), values=self._val_buf[:t].copy(),
                rewards=self.scaler.update(self._shaped_buf[:t], bool(done)),
                done=bool(done), last_value=float(last_value), steps=int(t))
            self.buffer.add(ep)
            if self.elite.replay_best > 0 and ep.done:
                self._best.append(ep)
                self._best.sort(key=lambda e: e.steps)
                del self._best[self.elite.replay_best:]
        if len(self.buffer) >= self.config.episodes_per_update:
            self.update()
        return rec

    # -- learning ---------------------------------------------------------

    def update(self):
        cfg = self.config
        extra = self._best if self.elite.replay_best > 0 else None
        x, actions, logp_old, adv, ret = self.buffer.concat(cfg.gamma, cfg.lam, extra)
        if cfg.normalize_advantages:
            adv = (adv - adv.mean()) / (adv.std() + 1e-8)
        n = x.shape[0]
        stats = np.zeros(6)
        batches = 0
        for _ in range(cfg.epochs):
            perm = self._shuffle_rng.permutation(n)
            for i in range(0, n, cfg.minibatch_size):
                idx = perm[i:i + cfg.minibatch_size]
                out = K.ppo_minibatch_step(
                    self.flat, self.adam.m, self.adam.v, self.adam.t,
                    self.net.sizes, x[idx], actions[idx], logp_old[idx],
                    adv[idx], ret[idx], cfg.clip_eps, cfg.value_coef,
                    cfg.entropy_coef, cfg.learning_rate,
                    self.adam.beta1, self.adam.beta2, self.adam.eps)
                self.adam.t = int(out[0])
                stats += np.array(out[1:])
                batches += 1
        stats /= max(batches, 1)
        self.last_update = {
            "loss": stats[0], "policy_loss": stats[1], "value_loss": stats[2],
            "entropy": stats[3], "clip_fraction": stats[4], "mean_ratio": stats[5],
            "batch_steps": float(n),
        }
        self.updates_done += 1
        self.buffer.clear()

    def train(self, episodes: int) -> list[MetricsRecord]:
        """Run `episodes` training episodes; returns their metric records."""
        start = len(self.records)
        for _ in range(int(episodes)):
            self.run_episode()
        return self.records[start:]

    # -- inference --------------------------------------------------------

    def evaluate(self, episodes: int = 1, greedy: bool = True,
                 max_steps: int | None = None) -> list[MetricsRecord]:
        """Roll episodes without learning or filtering; records metrics only."""
        out = []
        for _ in range(int(episodes)):
            (t, _done, _r, _c, _h, remaining, dist, rot, wall,
             base, shaped, _lv) = self._roll(greedy=greedy, max_steps=max_steps)
            rec = self._make_record(t, dist, rot, wall, base, shaped, remaining)
            out.append(rec)
        return out

    def act(self, obs: np.ndarray, greedy: bool = True) -> int:
        logits, _ = K.pv_forward_single(
            self.flat, self.net.sizes, np.ascontiguousarray(obs, dtype=np.float64))
        if greedy:
            return int(np.argmax(logits))
        p = np.exp(logits - logits.max())
        p /= p.sum()
        return int(self._rollout_rng.choice(8, p=p))

    def load_params(self, flat: np.ndarray):
        self.flat[:] = check_params(self.net, flat)
