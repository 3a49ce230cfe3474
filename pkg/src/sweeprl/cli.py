"""Command-line front end.

Subcommands: train, eval, compare, ablate, plot, map-validate.  Every run
directory receives a ``config.json`` echo of the fully-resolved settings, so
any result can be reproduced by pointing ``--config`` back at it; one global
``--seed`` pins all randomness.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import bench
from .errors import SweepRLError
from .maps import fully_reachable, get_map, parse_map, render_map
from .metrics import final_window, mean_of, write_csv
from .planners import RandomAgent, ZigzagAgent
from .policyio import load_policy, save_policy
from .ppo import PpoConfig
from .qlearn import DqnConfig


def parse_seeds(text: str) -> list[int]:
    """Accepts '0,1,2', '0-4', '0..4' or a single integer."""
    text = text.strip()
    for sep in ("..", "-"):
        if sep in text and not text.startswith("-"):
            lo, hi = text.split(sep, 1)
            return list(range(int(lo), int(hi) + 1))
    return [int(p) for p in text.split(",") if p.strip() != ""]


def parse_hidden(text) -> tuple[int, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(int(x) for x in text)
    return tuple(int(p) for p in str(text).split(",") if p.strip() != "")


TRAIN_DEFAULTS = {
    "algo": "ppo",
    "map": "room5",
    "episodes": 10000,
    "seed": 0,
    "seeds": None,
    "variant": "all",
    "obs": None,
    "no_dnut": False,
    "no_shaping": False,
    "no_elite": False,
    "shaping_base": 1.5,
    "max_steps": None,
    "hidden": [64, 64],
    "lr": None,
    "gamma": None,
    "out": None,
}


def _resolve(args: argparse.Namespace, defaults: dict) -> dict:
    """defaults <- config file <- explicit CLI flags; unknown file keys fail."""
    cfg = dict(defaults)
    path = getattr(args, "config", None)
    if path:
        file_cfg = json.loads(Path(path).read_text(encoding="utf-8"))
        file_cfg.pop("command", None)
        unknown = set(file_cfg) - set(defaults)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(file_cfg)
    for key in defaults:
        val = getattr(args, key, None)
        if val is not None and val is not False:
            cfg[key] = val
    return cfg


def _write_config(outdir: Path, command: str, cfg: dict) -> None:
    echo = {"command": command}
    echo.update({k: (list(v) if isinstance(v, tuple) else v) for k, v in cfg.items()})
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "config.json").write_text(
        json.dumps(echo, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _trainer_kwargs(cfg: dict) -> dict:
    variant = bench.resolve_variant(cfg["variant"])
    if cfg["obs"]:
        variant = replace(variant, obs_mode=cfg["obs"])
    if cfg["no_dnut"]:
        variant = replace(variant, include_dnut=False)
    if cfg["no_shaping"]:
        variant = replace(variant, shaping=False)
    if cfg["no_elite"]:
        variant = replace(variant, elite=False)
    ppo_cfg = PpoConfig()
    dqn_cfg = DqnConfig()
    if cfg["lr"] is not None:
        ppo_cfg = replace(ppo_cfg, learning_rate=float(cfg["lr"]))
        dqn_cfg = replace(dqn_cfg, learning_rate=float(cfg["lr"]))
    if cfg["gamma"] is not None:
        ppo_cfg = replace(ppo_cfg, gamma=float(cfg["gamma"]))
        dqn_cfg = replace(dqn_cfg, gamma=float(cfg["gamma"]))
    return dict(variant=variant, hidden=parse_hidden(cfg["hidden"]),
                ppo_config=ppo_cfg, dqn_config=dqn_cfg,
                shaping_base=float(cfg["shaping_base"]),
                max_steps=cfg["max_steps"] and int(cfg["max_steps"]))


def _default_out(command: str, cfg: dict) -> Path:
    stem = Path(str(cfg["map"])).stem
    return Path("runs") / f"{command}_{cfg['algo']}_{cfg['variant']}_{stem}_seed{cfg['seed']}"


def cmd_train(args) -> int:
    cfg = _resolve(args, TRAIN_DEFAULTS)
    if cfg["algo"] not in ("ppo", "dqn", "dueling"):
        raise ValueError(f"train expects a learnable algo, got {cfg['algo']!r}")
    grid = get_map(cfg["map"])
    outdir = Path(cfg["out"]) if cfg["out"] else _default_out("train", cfg)
    cfg["out"] = str(outdir)
    kw = _trainer_kwargs(cfg)
    trainer = bench.make_trainer(cfg["algo"], grid, variant=kw["variant"],
                                 seed=int(cfg["seed"]), hidden=kw["hidden"],
                                 ppo_config=kw["ppo_config"], dqn_config=kw["dqn_config"],
                                 shaping_base=kw["shaping_base"], max_steps=kw["max_steps"])
    records = trainer.train(int(cfg["episodes"]))
    _write_config(outdir, "train", cfg)
    write_csv(outdir / "metrics.csv", records)
    save_policy(outdir / "policy.sweeprl", trainer.flat, trainer.net, trainer.obs_spec,
                cfg["algo"], meta={"seed": int(cfg["seed"]),
                                   "episodes": int(cfg["episodes"]),
                                   "variant": kw["variant"].name,
                                   "map": str(cfg["map"])})
    tail = final_window(records, 100)
    print(f"trained {cfg['algo']} for {len(records)} episodes on {grid.height}x{grid.width} "
          f"(seed {cfg['seed']})")
    print(f"final-100 mean steps {mean_of(tail, 'steps'):.1f}, "
          f"coverage {mean_of(tail, 'coverage'):.3f}")
    print(f"wrote {outdir / 'metrics.csv'} and {outdir / 'policy.sweeprl'}")
    return 0


def cmd_eval(args) -> int:
    grid = get_map(args.map)
    records = []
    if args.policy:
        bundle = load_policy(args.policy)
        for i in range(args.episodes):
            rec, _ = bench.run_episode(bundle, grid, seed=args.seed + i,
                                       step_cap=args.max_steps)
            records.append(rec)
    elif args.algo in ("random", "zigzag"):
        for i in range(args.episodes):
            agent = RandomAgent(seed=args.seed + i) if args.algo == "random" else ZigzagAgent()
            rec, _ = bench.run_scripted(agent, grid, seed=args.seed + i,
                                        step_cap=args.max_steps if args.max_steps else None)
            records.append(rec)
    else:
        raise ValueError("eval needs --policy FILE or --algo random|zigzag")
    for i, r in enumerate(records):
        r.episode = i
        print(f"episode {i}: steps {r.steps}, coverage {r.coverage:.3f}, "
              f"distance {r.distance_m:.1f} m, rotation {r.rotation_units} units")
    if args.out:
        outdir = Path(args.out)
        write_csv(outdir / "eval.csv", records)
        _write_config(outdir, "eval", {
            "map": args.map, "policy": args.policy, "algo": args.algo,
            "episodes": args.episodes, "seed": args.seed, "max_steps": args.max_steps,
            "out": str(outdir)})
        print(f"wrote {outdir / 'eval.csv'}")
    return 0


def cmd_compare(args) -> int:
    grid = get_map(args.map)
    seeds = parse_seeds(args.seeds)
    bundle = load_policy(args.policy) if args.policy else None
    outdir = Path(args.out) if args.out else None
    rows = bench.compare_baselines(grid, seeds, bundle=bundle, outdir=outdir)
    header = f"{'policy':<10}{'distance_m':>12}{'rotation':>10}{'steps':>10}{'coverage':>10}"
    print(header)
    for r in rows:
        print(f"{r['policy']:<10}{r['distance_m']:>12.1f}{r['rotation_units']:>10.1f}"
              f"{r['steps']:>10.1f}{r['coverage']:>10.3f}")
    if outdir is not None:
        _write_config(outdir, "compare", {
            "map": args.map, "policy": args.policy, "seeds": seeds, "out": str(outdir)})
        print(f"wrote {outdir / 'baseline_table.csv'}")
    return 0


def cmd_ablate(args) -> int:
    cfg = _resolve(args, TRAIN_DEFAULTS)
    grid = get_map(cfg["map"])
    seeds = parse_seeds(cfg["seeds"]) if cfg["seeds"] else [int(cfg["seed"])]
    outdir = Path(cfg["out"]) if cfg["out"] else _default_out("ablate", cfg)
    cfg["out"] = str(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    _write_config(outdir, "ablate", cfg)
    kw = _trainer_kwargs(cfg)
    results = bench.run_ablation(
        grid, seeds, int(cfg["episodes"]), algo=cfg["algo"], outdir=outdir,
        hidden=kw["hidden"], ppo_config=kw["ppo_config"], dqn_config=kw["dqn_config"])
    for variant, by_seed in results.items():
        vals = [m["final_steps"] for m in by_seed.values()]
        print(f"{variant:<8} final-window steps: " +
              ", ".join(f"{v:.1f}" for v in vals))
    ordering = bench.ablation_ordering(results)
    best = sum(1 for v in ordering.values() if v["all_best"])
    worst = sum(1 for v in ordering.values() if v["plain_worst"])
    print(f"'all' best on {best}/{len(ordering)} seeds; 'plain' worst on "
          f"{worst}/{len(ordering)} seeds")
    print(f"wrote {outdir / 'ablation_summary.csv'}")
    return 0


def cmd_plot(args) -> int:
    bench.emit_plot(args.csv, args.out, column=args.column,
                    smooth=args.smooth, title=args.title)
    print(f"wrote {args.out}")
    return 0


def cmd_map_validate(args) -> int:
    text = Path(args.map).read_text(encoding="ascii")
    grid = parse_map(text)
    start = grid.start if grid.start is not None else grid.first_free()
    reachable = fully_reachable(grid, start)
    print(f"{args.map}: {grid.height}x{grid.width}, {grid.free_count} free cells, "
          f"start {start}, {'fully reachable' if reachable else 'UNREACHABLE CELLS'}")
    if args.show:
        sys.stdout.write(render_map(grid))
    return 0 if reachable else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sweeprl",
                                description="Coverage cleaning RL toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    def add_train_opts(sp):
        sp.add_argument("--algo", choices=["ppo", "dqn", "dueling"])
        sp.add_argument("--map", help="builtin map name or path to a map file")
        sp.add_argument("--episodes", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--variant", choices=sorted(bench.VARIANTS))
        sp.add_argument("--obs", choices=["local", "global"])
        sp.add_argument("--no-dnut", action="store_true", default=False)
        sp.add_argument("--no-shaping", action="store_true", default=False)
        sp.add_argument("--no-elite", action="store_true", default=False)
        sp.add_argument("--shaping-base", type=float)
        sp.add_argument("--max-steps", type=int)
        sp.add_argument("--hidden", help="comma-separated layer widths, e.g. 64,64")
        sp.add_argument("--lr", type=float)
        sp.add_argument("--gamma", type=float)
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--config", help="JSON file of settings (CLI flags win)")

    sp = sub.add_parser("train", help="train one agent")
    add_train_opts(sp)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="evaluate a saved policy or a scripted baseline")
    sp.add_argument("--map", required=True)
    sp.add_argument("--policy")
    sp.add_argument("--algo", choices=["random", "zigzag"])
    sp.add_argument("--episodes", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--max-steps", type=int, default=500)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("compare", help="baseline/policy comparison table")
    sp.add_argument("--map", required=True)
    sp.add_argument("--policy")
    sp.add_argument("--seeds", default="0-9")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("ablate", help="train every ablation arm over seeds")
    add_train_opts(sp)
    sp.add_argument("--seeds", help="e.g. 0,1,2 or 0-4")
    sp.set_defaults(func=cmd_ablate)

    sp = sub.add_parser("plot", help="render metric CSVs as an SVG line chart")
    sp.add_argument("csv", nargs="+")
    sp.add_argument("--out", required=True)
    sp.add_argument("--column", default="steps")
    sp.add_argument("--smooth", type=int, default=50)
    sp.add_argument("--title", default="")
    sp.set_defaults(func=cmd_plot)

    sp = sub.add_parser("map-validate", help="check a map file parses and is connected")
    sp.add_argument("map")
    sp.add_argument("--show", action="store_true")
    sp.set_defaults(func=cmd_map_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SweepRLError, ValueError, OSError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
