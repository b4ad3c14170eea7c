"""Command-line front end: runs, paired-seed comparisons, sweeps and plots.

Exit codes: 0 on success, 2 on configuration errors, 3 on runtime failures.
The environment variable ``ENTSCHED_SEED`` overrides the config seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from .metrics import WINDOW_SLOTS, windowed_means
from .sim_engine import ConfigError, RunConfig, run_simulation
from .topology import TopologyError

# Network-size presets: (nodes, edges per node, mean load, max arrivals).
SIZE_PRESETS = {
    "small": (10, 4, 2.0, 4),
    "medium": (20, 10, 6.0, 10),
    "large": (30, 14, 8.0, 14),
}


def _load_config(path: str) -> RunConfig:
    config = RunConfig.from_file(path)
    env_seed = os.environ.get("ENTSCHED_SEED")
    if env_seed is not None:
        try:
            config = replace(config, seed=int(env_seed))
        except ValueError as exc:
            raise ConfigError(f"ENTSCHED_SEED must be an integer: {env_seed!r}") from exc
    return config


def size_preset_config(base: RunConfig, size: str) -> RunConfig:
    nodes, k, lam, n_max = SIZE_PRESETS[size]
    return replace(
        base,
        topology=replace(base.topology, nodes=nodes, edges_per_node=k),
        arrivals=replace(base.arrivals, mean_per_slot=lam, maximum=n_max),
    )


def cmd_run(args) -> int:
    config = _load_config(args.config)
    report = run_simulation(config, out_dir=args.out)
    print(f"wrote {args.out}: successes={report.successes} "
          f"mean_delay={report.mean_delay_ns} handling={report.mean_handling_rate:.3f}")
    return 0


def _pair_config(base: RunConfig, name: str, seed: int, policy_path) -> RunConfig:
    config = replace(base, scheduler=name, seed=seed)
    if name == "ppo":
        if not (policy_path or config.policy_path):
            raise ConfigError("comparison includes ppo but no policy was given")
        config = replace(config, policy_path=policy_path or config.policy_path)
    return config


def _run_pair(job):
    config, run_dir = job
    return run_simulation(config, out_dir=run_dir)


def _comparison_rows(base: RunConfig, scheduler_names, seeds, out_dir: Path, policy_path=None, jobs=1):
    """Run every (scheduler, seed) pair on identical arrival traces.

    Pairs are independent deterministic runs, so they can fan out across
    processes without changing any output.
    """
    pairs = [
        (name, seed, _pair_config(base, name, seed, policy_path), out_dir / f"{name}-seed{seed}")
        for seed in seeds
        for name in scheduler_names
    ]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_run_pair, [(c, d) for _, _, c, d in pairs]))
    else:
        reports = [_run_pair((c, d)) for _, _, c, d in pairs]
    rows = []
    for seed in seeds:
        row = {"seed": seed}
        for name in scheduler_names:
            idx = next(
                i for i, (n, s, _, _) in enumerate(pairs) if n == name and s == seed
            )
            row[name] = reports[idx]
        rows.append(row)
    return rows


def _write_comparison(out_dir: Path, rows, scheduler_names, metric_fields) -> None:
    for metric, getter in metric_fields.items():
        with open(out_dir / f"compare_{metric}.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["seed"] + list(scheduler_names))
            for row in rows:
                writer.writerow([row["seed"]] + [getter(row[n]) for n in scheduler_names])
    # Windowed series (one column per scheduler-seed pair) for trend charts.
    for metric, attr in (("utilization", "utilization_windows"), ("handling_rate", "handling_windows")):
        columns = {
            f"{name}-seed{row['seed']}": getattr(row[name], attr)
            for row in rows
            for name in scheduler_names
        }
        depth = max((len(v) for v in columns.values()), default=0)
        with open(out_dir / f"windows_{metric}.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["window"] + list(columns))
            for i in range(depth):
                writer.writerow(
                    [i] + [columns[c][i] if i < len(columns[c]) else "" for c in columns]
                )


COMPARISON_METRICS = {
    "mean_delay_ns": lambda r: r.mean_delay_ns,
    "successes": lambda r: r.successes,
    "mean_utilization": lambda r: r.mean_utilization,
    "mean_handling_rate": lambda r: r.mean_handling_rate,
}


def cmd_compare(args) -> int:
    config = _load_config(args.config)
    names = [n.strip() for n in args.schedulers.split(",") if n.strip()]
    seeds = [int(s) for s in args.seeds.split(",")]
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = _comparison_rows(config, names, seeds, out_dir, policy_path=args.policy, jobs=args.jobs)
    _write_comparison(out_dir, rows, names, COMPARISON_METRICS)
    print(f"wrote comparison tables under {out_dir}")
    return 0


def cmd_sweep_size(args) -> int:
    base = _load_config(args.config)
    names = [n.strip() for n in args.schedulers.split(",") if n.strip()]
    seeds = [int(s) for s in args.seeds.split(",")]
    out_dir = Path(args.out)
    for size in args.sizes.split(","):
        size = size.strip()
        if size not in SIZE_PRESETS:
            raise ConfigError(f"unknown size preset {size!r}")
        rows = _comparison_rows(
            size_preset_config(base, size), names, seeds, out_dir / size,
            policy_path=args.policy, jobs=args.jobs,
        )
        _write_comparison(out_dir / size, rows, names, COMPARISON_METRICS)
    print(f"wrote size sweep under {out_dir}")
    return 0


def cmd_sweep_retries(args) -> int:
    base = _load_config(args.config)
    names = [n.strip() for n in args.schedulers.split(",") if n.strip()]
    seeds = [int(s) for s in args.seeds.split(",")]
    out_dir = Path(args.out)
    for retries in (int(r) for r in args.retries.split(",")):
        sub = out_dir / f"retries{retries}"
        rows = _comparison_rows(
            replace(base, max_retries=retries), names, seeds, sub,
            policy_path=args.policy, jobs=args.jobs,
        )
        _write_comparison(sub, rows, names, COMPARISON_METRICS)
    print(f"wrote retry sweep under {out_dir}")
    return 0


def cmd_sweep_topology(args) -> int:
    base = _load_config(args.config)
    names = [n.strip() for n in args.schedulers.split(",") if n.strip()]
    seeds = [int(s) for s in args.seeds.split(",")]
    out_dir = Path(args.out)
    variants = {
        "watts_strogatz": replace(base.topology, kind="watts_strogatz"),
        "random_geometric": replace(base.topology, kind="random_geometric"),
    }
    for label, topo in variants.items():
        sub = out_dir / label
        rows = _comparison_rows(
            replace(base, topology=topo), names, seeds, sub,
            policy_path=args.policy, jobs=args.jobs,
        )
        _write_comparison(sub, rows, names, COMPARISON_METRICS)
    print(f"wrote topology sweep under {out_dir}")
    return 0


def _read_metric_series(path: Path) -> tuple[list[float], list[float]]:
    utilization, handling = [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            utilization.append(float(row["u"]))
            handling.append(float(row["r_h"]))
    return utilization, handling


def cmd_plot(args) -> int:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    series = {}
    for path in args.metrics:
        path = Path(path)
        utilization, handling = _read_metric_series(path)
        if not utilization:
            raise ConfigError(f"metrics file {path} holds no slot rows")
        series[path.parent.name or path.stem] = (utilization, handling)
    for idx, (title, key) in enumerate(
        [("Capacity utilization", 0), ("Handling rate", 1)]
    ):
        fig, ax = plt.subplots(figsize=(7, 4))
        for label, data in series.items():
            windows = windowed_means(data[key], WINDOW_SLOTS)
            ax.plot(
                [w * WINDOW_SLOTS for w in range(len(windows))],
                windows,
                label=label,
                marker="o",
                markersize=3,
            )
        ax.set_xlabel("time slot")
        ax.set_ylabel(title.lower())
        ax.set_title(f"{title} ({WINDOW_SLOTS}-slot windows)")
        ax.legend(fontsize=7)
        name = ["utilization.png", "handling_rate.png"][idx]
        fig.savefig(out_dir / name, dpi=120, bbox_inches="tight")
        plt.close(fig)
    print(f"wrote charts under {out_dir}")
    return 0


def cmd_serve_env(args) -> int:
    from . import rl_bridge

    config = _load_config(args.config)
    rl_bridge.serve(config, stdio=args.stdio, port=args.port)
    return 0


def cmd_eval_policy(args) -> int:
    config = _load_config(args.config)
    config = replace(config, scheduler="ppo", policy_path=args.policy)
    config.validate()
    seeds = [int(s) for s in args.seeds.split(",")] if args.seeds else [config.seed]
    out_dir = Path(args.out)
    totals = []
    for seed in seeds:
        report = run_simulation(
            replace(config, seed=seed), out_dir=out_dir / f"seed{seed}"
        )
        totals.append(report.successes)
        print(f"seed {seed}: successes={report.successes} mean_delay={report.mean_delay_ns}")
    (out_dir / "eval.json").write_text(
        json.dumps({"seeds": seeds, "successes": totals}, indent=2)
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="entsched",
        description="Entanglement-request scheduling simulator for multi-channel quantum networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one simulation from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="paired-seed comparison across schedulers")
    p.add_argument("--config", required=True)
    p.add_argument("--schedulers", required=True, help="comma-separated scheduler names")
    p.add_argument("--seeds", required=True, help="comma-separated integer seeds")
    p.add_argument("--out", required=True)
    p.add_argument("--policy", help="policy file for the ppo scheduler")
    p.add_argument("--jobs", type=int, default=1, help="parallel (scheduler, seed) runs")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep-size", help="compare schedulers across network sizes")
    p.add_argument("--config", required=True)
    p.add_argument("--schedulers", required=True)
    p.add_argument("--seeds", required=True)
    p.add_argument("--sizes", default="small,medium,large")
    p.add_argument("--out", required=True)
    p.add_argument("--policy")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep_size)

    p = sub.add_parser("sweep-retries", help="compare schedulers across retry caps")
    p.add_argument("--config", required=True)
    p.add_argument("--schedulers", required=True)
    p.add_argument("--seeds", required=True)
    p.add_argument("--retries", default="0,1,2")
    p.add_argument("--out", required=True)
    p.add_argument("--policy")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep_retries)

    p = sub.add_parser("sweep-topology", help="compare the two topology families")
    p.add_argument("--config", required=True)
    p.add_argument("--schedulers", required=True)
    p.add_argument("--seeds", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--policy")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep_topology)

    p = sub.add_parser("plot", help="windowed metric charts from slot_metrics CSVs")
    p.add_argument("metrics", nargs="+", help="slot_metrics.csv files")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("serve-env", help="serve the RL environment protocol")
    p.add_argument("--config", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--stdio", action="store_true")
    group.add_argument("--port", type=int, default=None)
    p.set_defaults(func=cmd_serve_env)

    p = sub.add_parser("eval-policy", help="run the simulator with a trained policy")
    p.add_argument("--config", required=True)
    p.add_argument("--policy", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seeds", help="comma-separated seeds (default: config seed)")
    p.set_defaults(func=cmd_eval_policy)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (TopologyError, OSError, RuntimeError, ValueError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
