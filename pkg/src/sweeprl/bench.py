"""Experiment harness: training runs, ablations, transfer and baseline tables.

Every experiment decomposes into independent (variant, seed) training runs;
``SWEEPRL_THREADS`` > 1 fans them out over worker processes, while the
default of 1 keeps everything on one thread so outputs are byte-reproducible.
Results land as the standard metrics CSV plus SVG charts.
"""

from __future__ import annotations

import multiprocessing
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import MalformedCsvError, ObservationMismatchError
from .maps import GridMap
from .metrics import MetricsRecord, final_window, mean_of, read_csv, write_csv
from .neural import NetSpec
from .percept import ObservationSpec
from .planners import RandomAgent, ZigzagAgent
from .policyio import PolicyBundle, load_policy, save_policy
from .ppo import PpoConfig, PpoTrainer
from .qlearn import DqnConfig, DqnTrainer
from .shaping import EliteConfig, ShapingConfig, StackState, shaped_step
from .svgplot import bar_chart, line_chart, save_svg
from .world import CleaningEnv

THREADS_VAR = "SWEEPRL_THREADS"

#: Step cap while the elite filter is active (truncated episodes dropped).
ELITE_CAP = 500
#: Looser safety cap when the filter is disabled and truncations train too.
NO_ES_CAP = 2500
#: Episodes averaged for the ablation's final-performance summary.
SUMMARY_WINDOW = 500
#: Trailing episodes averaged when deciding a run has "reached" a threshold.
THRESHOLD_WINDOW = 20
#: Default step budget per free cell for scripted baseline episodes.
SCRIPTED_CAP_PER_CELL = 100


@dataclass(frozen=True)
class Variant:
    """One ablation arm: which techniques stay enabled."""

    name: str
    obs_mode: str
    include_dnut: bool
    shaping: bool
    elite: bool


VARIANTS = {
    "all": Variant("all", "local", True, True, True),
    "no-dnut": Variant("no-dnut", "local", False, True, True),
    "no-rs": Variant("no-rs", "local", True, False, True),
    "no-es": Variant("no-es", "local", True, True, False),
    "global": Variant("global", "global", False, True, True),
    "plain": Variant("plain", "global", False, False, False),
}


def worker_count() -> int:
    raw = os.environ.get(THREADS_VAR, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def resolve_variant(variant) -> Variant:
    if isinstance(variant, Variant):
        return variant
    try:
        return VARIANTS[variant]
    except KeyError:
        raise ValueError(f"unknown variant {variant!r}; have {sorted(VARIANTS)}") from None


def variant_components(variant) -> tuple[ObservationSpec, ShapingConfig, EliteConfig]:
    v = resolve_variant(variant)
    obs = ObservationSpec(mode=v.obs_mode, include_dnut=v.include_dnut)
    shap = ShapingConfig(enabled=v.shaping)
    elite = (EliteConfig(max_steps=ELITE_CAP) if v.elite
             else EliteConfig(max_steps=NO_ES_CAP, keep_truncated=True))
    return obs, shap, elite


def make_trainer(algo: str, grid: GridMap, variant="all", seed: int = 0,
                 hidden: tuple[int, ...] = (64, 64),
                 ppo_config: PpoConfig | None = None,
                 dqn_config: DqnConfig | None = None,
                 shaping_base: float | None = None,
                 max_steps: int | None = None):
    """Build a PPO/DQN/dueling trainer wired for the given ablation arm."""
    obs, shap, elite = variant_components(variant)
    if shaping_base is not None:
        shap = replace(shap, base=shaping_base)
    if max_steps is not None:
        elite = replace(elite, max_steps=max_steps)
    if algo == "ppo":
        net = NetSpec(obs.size(grid), hidden, "pv")
        return PpoTrainer(grid, obs, ppo_config, net, shap, elite, seed=seed)
    if algo in ("dqn", "dueling"):
        net = NetSpec(obs.size(grid), hidden, "dueling" if algo == "dueling" else "q")
        return DqnTrainer(grid, obs, dqn_config, net, shap, elite, seed=seed)
    raise ValueError(f"unknown algo {algo!r}; have ppo, dqn, dueling")


# ---------------------------------------------------------------------------
# single-episode evaluation
# ---------------------------------------------------------------------------

def greedy_action(bundle: PolicyBundle, obs: np.ndarray) -> int:
    from .neural import action_values, policy_value
    if bundle.net.head == "pv":
        logits, _ = policy_value(bundle.net, bundle.flat, obs)
        return int(np.argmax(logits))
    return int(np.argmax(action_values(bundle.net, bundle.flat, obs)))


def check_policy_fits(bundle: PolicyBundle, grid: GridMap) -> None:
    need = bundle.obs_spec.size(grid)
    if need != bundle.net.input_size:
        raise ObservationMismatchError(
            f"policy expects observations of size {bundle.net.input_size} but the "
            f"{grid.height}x{grid.width} map yields {need} "
            f"({bundle.obs_spec.mode} mode)")


def run_episode(bundle: PolicyBundle, grid: GridMap, seed: int = 0,
                shaping: ShapingConfig | None = None,
                step_cap: int = ELITE_CAP) -> tuple[MetricsRecord, list[tuple[int, int]]]:
    """One greedy evaluation episode; returns metrics and the visited cells.

    Coverage/steps/distance come from raw environment quantities; the shaped
    column is computed on the side under `shaping` (default settings if None).
    """
    check_policy_fits(bundle, grid)
    shaping = shaping or ShapingConfig()
    env = CleaningEnv(grid)
    stack = StackState()
    base_total = 0.0
    shaped_total = 0.0
    traj = [(env.state.row, env.state.col)]
    while not env.done and env.steps < step_cap:
        obs = bundle.obs_spec.encode(env)
        out = env.step(greedy_action(bundle, obs))
        shaped, _ = shaped_step(out.tile_reward, out.rotation_reward, stack, shaping)
        base_total += out.reward
        shaped_total += shaped
        traj.append((out.state.row, out.state.col))
    rec = MetricsRecord(
        episode=0, steps=env.steps, coverage=env.coverage,
        distance_m=env.distance_total, rotation_units=env.rotation_total,
        base_reward=base_total, shaped_reward=shaped_total,
        wall_hits=env.wall_hits, seed=seed)
    return rec, traj


def run_scripted(agent, grid: GridMap, seed: int = 0,
                 step_cap: int | None = None) -> tuple[MetricsRecord, list[tuple[int, int]]]:
    """Roll a scripted agent (random / zigzag) to completion or cap."""
    env = CleaningEnv(grid)
    agent.reset(env)
    if step_cap is None:
        step_cap = SCRIPTED_CAP_PER_CELL * grid.free_count
    base_total = 0.0
    traj = [(env.state.row, env.state.col)]
    while not env.done and env.steps < step_cap:
        out = env.step(agent(env))
        base_total += out.reward
        traj.append((out.state.row, out.state.col))
    rec = MetricsRecord(
        episode=0, steps=env.steps, coverage=env.coverage,
        distance_m=env.distance_total, rotation_units=env.rotation_total,
        base_reward=base_total, shaped_reward=base_total,
        wall_hits=env.wall_hits, seed=seed)
    return rec, traj


# ---------------------------------------------------------------------------
# training runs and their summaries
# ---------------------------------------------------------------------------

@dataclass
class TrainRun:
    """Output of one (algo, variant, seed) training run."""

    algo: str
    variant: str
    seed: int
    records: list[MetricsRecord]
    flat: np.ndarray
    net: NetSpec
    obs_spec: ObservationSpec

    @property
    def bundle(self) -> PolicyBundle:
        return PolicyBundle(flat=self.flat, net=self.net, obs_spec=self.obs_spec,
                            algo=self.algo, meta={})

    def summary(self, window: int = SUMMARY_WINDOW) -> dict:
        tail = final_window(self.records, window)
        return {
            "algo": self.algo, "variant": self.variant, "seed": self.seed,
            "episodes": len(self.records),
            "final_steps": mean_of(tail, "steps"),
            "final_coverage": mean_of(tail, "coverage"),
            "final_base_reward": mean_of(tail, "base_reward"),
            "final_shaped_reward": mean_of(tail, "shaped_reward"),
        }


def run_training(algo: str, grid: GridMap, variant="all", seed: int = 0,
                 episodes: int = 10_000, outdir=None, label: str | None = None,
                 **trainer_kw) -> TrainRun:
    """Train one agent and optionally persist its CSV + policy snapshot."""
    trainer = make_trainer(algo, grid, variant=variant, seed=seed, **trainer_kw)
    trainer.train(episodes)
    vname = resolve_variant(variant).name
    run = TrainRun(algo=algo, variant=vname, seed=seed, records=trainer.records,
                   flat=trainer.flat.copy(), net=trainer.net, obs_spec=trainer.obs_spec)
    if outdir is not None:
        outdir = Path(outdir)
        label = label or f"{algo}_{vname}_seed{seed}"
        write_csv(outdir / f"{label}.csv", run.records)
        save_policy(outdir / f"{label}.sweeprl", run.flat, run.net, run.obs_spec,
                    algo, meta={"variant": vname, "seed": seed, "episodes": episodes})
    return run


def _training_task(kw: dict) -> TrainRun:
    return run_training(**kw)


def _map_runs(tasks: list[dict]) -> list[TrainRun]:
    n = worker_count()
    if n <= 1 or len(tasks) <= 1:
        return [_training_task(t) for t in tasks]
    ctx = multiprocessing.get_context("fork")
    with ProcessPoolExecutor(max_workers=min(n, len(tasks)), mp_context=ctx) as pool:
        return list(pool.map(_training_task, tasks))


def episodes_to_threshold(records, threshold: float, attr: str = "base_reward",
                          window: int = THRESHOLD_WINDOW) -> int | None:
    """First episode count at which the trailing-window mean reaches threshold."""
    vals = [getattr(r, attr) for r in records]
    acc = 0.0
    for i, v in enumerate(vals):
        acc += v
        if i >= window:
            acc -= vals[i - window]
        if i + 1 >= window and acc / window >= threshold:
            return i + 1
    return None


def reward_threshold(grid: GridMap) -> float:
    """Base-reward level a run must sustain to count as having learned the
    map: one wasted reward unit per free cell, far above any failing run."""
    return -float(grid.free_count)


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

def run_ablation(grid: GridMap, seeds, episodes: int, algo: str = "ppo",
                 outdir=None, variants=None, **trainer_kw) -> dict:
    """Train every ablation arm on every seed; returns per-run summaries.

    Result layout: {variant: {seed: summary dict}}.  With `outdir` set, each
    run's CSV + policy land there along with ablation_summary.csv and a mean
    steps-per-episode learning-curve SVG.
    """
    names = list(variants or VARIANTS)
    seeds = [int(s) for s in seeds]
    tasks = [dict(algo=algo, grid=grid, variant=v, seed=s, episodes=episodes,
                  outdir=outdir, **trainer_kw)
             for v in names for s in seeds]
    runs = _map_runs(tasks)
    by_variant: dict[str, dict[int, dict]] = {v: {} for v in names}
    curves: dict[str, tuple[list, list]] = {}
    for run in runs:
        by_variant[run.variant][run.seed] = run.summary()
    if outdir is not None:
        outdir = Path(outdir)
        lines = ["variant,seed,episodes,final_steps,final_coverage,final_base_reward,final_shaped_reward"]
        for v in names:
            for s in seeds:
                m = by_variant[v][s]
                lines.append(f"{v},{s},{m['episodes']},{m['final_steps']:.6f},"
                             f"{m['final_coverage']:.6f},{m['final_base_reward']:.6f},"
                             f"{m['final_shaped_reward']:.6f}")
        (outdir / "ablation_summary.csv").write_bytes(("\n".join(lines) + "\n").encode("ascii"))
        for v in names:
            seed_runs = [r for r in runs if r.variant == v]
            n = min(len(r.records) for r in seed_runs)
            steps = np.mean([[rec.steps for rec in r.records[:n]] for r in seed_runs], axis=0)
            xs, ys = _smooth(np.arange(1, n + 1), steps, 100)
            curves[v] = (xs, ys)
        save_svg(outdir / "ablation_steps.svg",
                 line_chart(curves, title=f"{algo} ablation on {grid.height}x{grid.width}",
                            xlabel="episode", ylabel="steps per episode (mean over seeds)"))
    return by_variant


def ablation_ordering(results: dict) -> dict:
    """Per-seed check: ALL at least ties every arm; plain is the worst arm."""
    seeds = sorted(results["all"])
    per_seed = {}
    for s in seeds:
        final = {v: results[v][s]["final_steps"] for v in results}
        all_best = all(final["all"] <= final[v] for v in results if v != "all")
        plain_worst = all(final["plain"] >= final[v] for v in results if v != "plain")
        per_seed[s] = {"all_best": all_best, "plain_worst": plain_worst,
                       "final_steps": final}
    return per_seed


def run_transfer(bundle: PolicyBundle, grid: GridMap, step_cap: int = 3000,
                 seed: int = 0) -> MetricsRecord:
    """Evaluate a trained policy on a new map with no retraining."""
    rec, _ = run_episode(bundle, grid, seed=seed, step_cap=step_cap)
    return rec


def compare_baselines(grid: GridMap, seeds, bundle: PolicyBundle | None = None,
                      outdir=None) -> list[dict]:
    """Distance/rotation/steps/coverage table: Random (seed mean), Zigzag,
    and optionally a trained policy; CSV + bar-chart SVG when outdir given."""
    rows = []
    rand = [run_scripted(RandomAgent(seed=s), grid, seed=s)[0] for s in seeds]
    rows.append({
        "policy": "random",
        "distance_m": float(np.mean([r.distance_m for r in rand])),
        "rotation_units": float(np.mean([r.rotation_units for r in rand])),
        "steps": float(np.mean([r.steps for r in rand])),
        "coverage": float(np.mean([r.coverage for r in rand])),
    })
    zz = run_scripted(ZigzagAgent(), grid)[0]
    rows.append({"policy": "zigzag", "distance_m": zz.distance_m,
                 "rotation_units": float(zz.rotation_units),
                 "steps": float(zz.steps), "coverage": zz.coverage})
    if bundle is not None:
        pol = run_episode(bundle, grid, step_cap=10 * grid.free_count)[0]
        rows.append({"policy": bundle.algo, "distance_m": pol.distance_m,
                     "rotation_units": float(pol.rotation_units),
                     "steps": float(pol.steps), "coverage": pol.coverage})
    if outdir is not None:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        lines = ["policy,distance_m,rotation_units,steps,coverage"]
        lines += [f"{r['policy']},{r['distance_m']:.6f},{r['rotation_units']:.6f},"
                  f"{r['steps']:.6f},{r['coverage']:.6f}" for r in rows]
        (outdir / "baseline_table.csv").write_bytes(("\n".join(lines) + "\n").encode("ascii"))
        save_svg(outdir / "baseline_distance.svg",
                 bar_chart([r["policy"] for r in rows], [r["distance_m"] for r in rows],
                           title=f"travel distance on {grid.height}x{grid.width}",
                           ylabel="distance (m)"))
    return rows


def compare_algorithms(grid: GridMap, seeds, episodes: int,
                       algos=("ppo", "dqn"), variant="all", outdir=None,
                       threshold: float | None = None, **trainer_kw) -> dict:
    """Episodes-to-threshold per algorithm per seed (None = never reached)."""
    if threshold is None:
        threshold = reward_threshold(grid)
    seeds = [int(s) for s in seeds]
    tasks = [dict(algo=a, grid=grid, variant=variant, seed=s, episodes=episodes,
                  outdir=outdir, **trainer_kw)
             for a in algos for s in seeds]
    runs = _map_runs(tasks)
    out: dict[str, dict[int, int | None]] = {a: {} for a in algos}
    for run in runs:
        out[run.algo][run.seed] = episodes_to_threshold(run.records, threshold)
    return out


# ---------------------------------------------------------------------------
# plotting from CSV
# ---------------------------------------------------------------------------

def _smooth(xs, ys, window: int):
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if window <= 1 or ys.shape[0] <= window:
        return list(xs), list(ys)
    kernel = np.ones(window) / window
    sm = np.convolve(ys, kernel, mode="valid")
    return list(xs[window - 1:]), list(sm)


def emit_plot(csv_paths, out_path, column: str = "steps", smooth: int = 50,
              title: str = "") -> str:
    """Line chart with one series per CSV file; returns the SVG text."""
    series = {}
    for path in csv_paths:
        records = read_csv(path)
        if not records:
            raise MalformedCsvError(f"{path}: no data rows")
        xs = [r.episode for r in records]
        ys = [getattr(r, column) for r in records]
        series[Path(path).stem] = _smooth(xs, ys, smooth)
    svg = line_chart(series, title=title or column, xlabel="episode", ylabel=column)
    save_svg(out_path, svg)
    return svg
