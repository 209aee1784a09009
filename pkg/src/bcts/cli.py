"""Command-line front end.

Subcommands: ``gen-data`` (synthesize dataset CSVs), ``learn`` (persist a
constrained policy), ``run`` (full sweep, trajectory + summary CSVs),
``report`` (print the summary table and re-verify its aggregates),
``plot`` (regret / error charts). Seeds resolve as
``--seed`` > ``BCTS_SEED`` > the config's ``master_seed``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .agents import learn_constraints, save_policy
from .config import ExperimentConfig, config_to_dict, parse_config
from .environments import (
    generate_warfarin_patients,
    save_constraint_matrix,
    save_genres_csv,
    save_ratings_csv,
    save_warfarin_csv,
    split_folds,
)
from .errors import ParameterError
from .runner import (
    CONSTRAINTS_FILE,
    GENRES_FILE,
    RATINGS_FILE,
    WARFARIN_FILE,
    ResultTable,
    build_base_env,
    recompute_aggregates,
    run_experiment,
    synthesize_movie_dataset,
)
from .plotting import emit_plot, write_trajectory_csv
from .posterior import SamplerParams
from .rng import DATA, FOLDS, LEARN_CLI, substream

SUMMARY_FILE = "summary.csv"
MANIFEST_FILE = "manifest.json"
TRAJECTORY_DIR = "trajectories"


def _resolve_seed(args, config: ExperimentConfig) -> int:
    if args.seed is not None:
        return args.seed
    env_seed = os.environ.get("BCTS_SEED")
    if env_seed is not None:
        try:
            return int(env_seed)
        except ValueError as exc:
            raise ParameterError(f"BCTS_SEED is not an integer: {env_seed!r}") from exc
    return config.master_seed


def _write_manifest(out_dir: Path, command: str, config: ExperimentConfig,
                    seed: int, outputs: list, timings: dict) -> Path:
    manifest = {
        "artifact_version": __version__,
        "command": command,
        "master_seed": seed,
        "config": config_to_dict(config),
        "outputs": sorted(str(p) for p in outputs),
        "timings": timings,
    }
    path = out_dir / MANIFEST_FILE
    path.write_text(json.dumps(manifest, indent=1) + "\n")
    return path


def cmd_gen_data(config: ExperimentConfig, seed: int, out_dir: Path) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    outputs = []
    if config.scenario == "movie":
        dataset = synthesize_movie_dataset(config, seed)
        save_ratings_csv(dataset.ratings, out_dir / RATINGS_FILE)
        save_genres_csv(dataset.genres, out_dir / GENRES_FILE)
        save_constraint_matrix(dataset.cm, out_dir / CONSTRAINTS_FILE)
        outputs = [out_dir / RATINGS_FILE, out_dir / GENRES_FILE,
                   out_dir / CONSTRAINTS_FILE]
    else:
        features, labels = generate_warfarin_patients(
            config.warfarin.num_patients, config.warfarin.base_d, substream(seed, DATA)
        )
        save_warfarin_csv(features, labels, out_dir / WARFARIN_FILE)
        outputs = [out_dir / WARFARIN_FILE]
    _write_manifest(out_dir, "gen-data", config, seed, outputs,
                    {"total_s": time.perf_counter() - started})
    for path in outputs:
        print(f"wrote {path}")
    return 0


def cmd_learn(config: ExperimentConfig, seed: int, out_dir: Path) -> int:
    """Teach a policy on the first fold's training contexts and persist it."""
    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    env = build_base_env(config, seed)
    folds = split_folds(env.n_steps, config.n_folds, config.train_size,
                        substream(seed, FOLDS))
    train_env = env.subset(folds[0][0])
    settings = config.constrained_sampler or config.sampler
    sampler = SamplerParams(R=settings.R, z=settings.z, gamma=settings.gamma, d=env.d)
    method = config.teaching_methods[0]
    budget = config.teaching_budgets[0]
    policy = learn_constraints(
        train_env, budget, method, sampler,
        np.random.SeedSequence(seed, spawn_key=(LEARN_CLI,)),
    )
    policy_path = Path(config.policy_path) if config.policy_path else out_dir / "policy.json"
    policy_path.parent.mkdir(parents=True, exist_ok=True)
    save_policy(policy, policy_path)
    _write_manifest(out_dir, "learn", config, seed, [policy_path],
                    {"total_s": time.perf_counter() - started})
    print(f"learned {method} policy with {budget} examples -> {policy_path}")
    return 0


def cmd_run(config: ExperimentConfig, seed: int, out_dir: Path, parallel: int) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    traj_dir = out_dir / TRAJECTORY_DIR
    traj_dir.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    result = run_experiment(config, master_seed=seed, parallel=parallel)
    outputs = []
    for label, log in result.trajectories.items():
        path = traj_dir / f"traj_{label}.csv"
        write_trajectory_csv(log, path)
        outputs.append(path)
    summary_path = out_dir / SUMMARY_FILE
    result.table.to_csv(summary_path)
    outputs.append(summary_path)
    _write_manifest(out_dir, "run", config, seed, outputs,
                    {"total_s": time.perf_counter() - started})
    for row in result.table.aggregates:
        if row.fold == "AGG":
            sigma = "" if row.sigma is None else f" sigma={row.sigma}"
            print(f"{row.scenario} {row.method} N={row.N}{sigma}: "
                  f"R(T)={row.R_T:.4f} E(T)={row.E_T:.1f}")
    print(f"wrote {summary_path} and {len(outputs) - 1} trajectory files")
    return 0


def cmd_report(out_dir: Path) -> int:
    summary_path = out_dir / SUMMARY_FILE
    if not summary_path.exists():
        raise ParameterError(f"no summary at {summary_path}; run `bcts run` first")
    table = ResultTable.from_csv(summary_path)
    recomputed = recompute_aggregates(table.rows)
    stored = {(r.method, r.N, r.sigma, r.fold): r for r in table.aggregates}
    for row in recomputed:
        match = stored.get((row.method, row.N, row.sigma, row.fold))
        if match is None or match.R_T != row.R_T or match.E_T != row.E_T:
            print(f"aggregate mismatch at {row}", file=sys.stderr)
            return 1
    _print_report(table)
    return 0


def _print_report(table: ResultTable) -> None:
    agg = [r for r in table.aggregates if r.fold == "AGG"]
    if not agg:
        print("no aggregate rows")
        return
    scenario = agg[0].scenario
    print(f"scenario: {scenario} (means over folds and seeds)")
    for row in agg:
        if row.method in ("mask", "online"):
            print(f"  {row.method:<8} R(T)={row.R_T:.4f}  E(T)={row.E_T:.1f}")
    methods = sorted({r.method for r in agg} - {"mask", "online"})
    for method in methods:
        rows = [r for r in agg if r.method == method]
        sigmas = sorted({r.sigma for r in rows})
        budgets = sorted({r.N for r in rows})
        print(f"  teaching={method}")
        header = "    N      " + "  ".join(f"sigma={s:<4} R(T)/E(T)" for s in sigmas)
        print(header)
        for n in budgets:
            cells = []
            for s in sigmas:
                match = [r for r in rows if r.N == n and r.sigma == s]
                cells.append(
                    f"{match[0].R_T:.3f}/{match[0].E_T:<9.1f}" if match else "-"
                )
            print(f"    {n:<6} " + "  ".join(cells))


def cmd_plot(out_dir: Path) -> int:
    traj_dir = out_dir / TRAJECTORY_DIR
    if not traj_dir.is_dir():
        raise ParameterError(f"no trajectory directory at {traj_dir}")
    outputs = []
    for kind in ("regret", "error"):
        outputs.append(emit_plot(traj_dir, kind, out_dir / f"{kind}.svg"))
    for path in outputs:
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bcts",
        description="Constraint-aware Thompson-sampling experiment harness",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, needs_config in (
        ("gen-data", True),
        ("learn", True),
        ("run", True),
        ("report", False),
        ("plot", False),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, required=needs_config,
                       help="experiment config (YAML)")
        p.add_argument("--seed", type=int, default=None,
                       help="master seed (falls back to BCTS_SEED, then the config)")
        p.add_argument("--out", type=Path, default=None,
                       help="output directory (defaults to the config's out_dir)")
        p.add_argument("--parallel", type=int, default=1,
                       help="worker threads for the run grid")
    return parser


def execute(args) -> int:
    config = parse_config(args.config) if args.config else None
    if args.command in ("report", "plot"):
        out_dir = args.out or (Path(config.out_dir) if config else None)
        if out_dir is None:
            raise ParameterError(f"{args.command} needs --out or --config")
        return cmd_report(Path(out_dir)) if args.command == "report" else cmd_plot(Path(out_dir))

    seed = _resolve_seed(args, config)
    out_dir = Path(args.out) if args.out else Path(config.out_dir)
    if args.command == "gen-data":
        if config.data_dir is not None and args.out is None:
            out_dir = Path(config.data_dir)
        return cmd_gen_data(config, seed, out_dir)
    if args.command == "learn":
        return cmd_learn(config, seed, out_dir)
    if args.command == "run":
        return cmd_run(config, seed, out_dir, max(1, args.parallel))
    raise ParameterError(f"unknown command {args.command!r}")  # pragma: no cover


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return execute(args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
