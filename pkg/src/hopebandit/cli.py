"""Command-line interface.

Subcommands:

* run      -- execute the benchmark grid from a config file; writes
              raw_traces.csv, aggregate.csv, and one regret_<scenario>.svg
              per scenario into the output directory.
* plot     -- re-render the figures from an existing aggregate.csv.
* validate -- check a config file and report problems without running.

Exit codes: 0 on success, 1 for configuration problems (including pairs
that had to be skipped), 2 for runtime failures.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

from .config import feasibility_problems, load_config
from .core import ConfigError
from .harness import (
    AGGREGATE_CSV_NAME,
    RAW_CSV_NAME,
    filter_config,
    read_aggregate_csv,
    run_experiment,
    write_aggregate_csv,
    write_raw_csv,
)
from .plots import emit_plot

JOBS_ENV_VAR = "HOPEBANDIT_JOBS"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hopebandit",
                                     description="high-dimensional bandit benchmark harness")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run the benchmark grid")
    run_p.add_argument("--config", required=True, help="path to the YAML experiment config")
    run_p.add_argument("--out", default=None, help="output directory (default: config output_dir or ./results)")
    run_p.add_argument("--reps", type=int, default=None, help="override the repetition count")
    run_p.add_argument("--seed", type=int, default=None, help="override the master seed")
    run_p.add_argument("--scenario", default=None, help="run a single scenario id")
    run_p.add_argument("--policy", default=None, help="run a single policy")
    run_p.add_argument("--jobs", type=int, default=None,
                       help=f"worker processes (default: config jobs, then ${JOBS_ENV_VAR}, then 1)")

    plot_p = sub.add_parser("plot", help="render figures from an aggregate CSV")
    plot_p.add_argument("--from", dest="from_path", required=True, help="path to aggregate.csv")
    plot_p.add_argument("--out", required=True, help="directory for the figures")

    val_p = sub.add_parser("validate", help="validate a config file")
    val_p.add_argument("--config", required=True, help="path to the YAML experiment config")
    return parser


def _resolve_jobs(cli_jobs, config_jobs) -> int:
    if cli_jobs is not None:
        jobs = cli_jobs
    elif config_jobs is not None:
        jobs = config_jobs
    else:
        raw = os.environ.get(JOBS_ENV_VAR)
        if raw is None:
            return 1
        try:
            jobs = int(raw)
        except ValueError:
            raise ConfigError(f"${JOBS_ENV_VAR} must be an integer, got {raw!r}") from None
    if jobs < 1:
        raise ConfigError(f"jobs must be >= 1, got {jobs}")
    return jobs


def _cmd_run(args) -> int:
    config = load_config(args.config)
    if args.reps is not None:
        if args.reps < 1:
            raise ConfigError(f"--reps must be >= 1, got {args.reps}")
        config = replace(config, repetitions=args.reps)
    if args.seed is not None:
        if not (0 <= args.seed < 2**64):
            raise ConfigError(f"--seed must be a uint64, got {args.seed}")
        config = replace(config, master_seed=args.seed)
    config = filter_config(config, scenario=args.scenario, policy=args.policy)
    jobs = _resolve_jobs(args.jobs, config.jobs)

    out_dir = Path(args.out if args.out is not None else (config.output_dir or "results"))
    out_dir.mkdir(parents=True, exist_ok=True)

    result = run_experiment(config, jobs=jobs)
    for message in result.skipped:
        print(f"skipped: {message}", file=sys.stderr)

    raw_path = write_raw_csv(result.traces, out_dir / RAW_CSV_NAME)
    agg_path = write_aggregate_csv(result.aggregates, out_dir / AGGREGATE_CSV_NAME)
    print(f"wrote {raw_path} ({len(result.traces)} traces)")
    print(f"wrote {agg_path} ({len(result.aggregates)} groups)")
    if result.aggregates:
        for fig_path in emit_plot(result.aggregates, out_dir):
            print(f"wrote {fig_path}")
    return 1 if result.skipped else 0


def _cmd_plot(args) -> int:
    aggregates = read_aggregate_csv(args.from_path)
    for fig_path in emit_plot(aggregates, args.out):
        print(f"wrote {fig_path}")
    return 0


def _cmd_validate(args) -> int:
    config = load_config(args.config)
    problems = feasibility_problems(config)
    if problems:
        for message in problems:
            print(f"problem: {message}", file=sys.stderr)
        return 1
    cells = len(config.scenarios) * len(config.policies) * config.repetitions
    print(f"ok: {len(config.scenarios)} scenarios x {len(config.policies)} policies "
          f"x {config.repetitions} repetitions = {cells} cells")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "plot":
            return _cmd_plot(args)
        return _cmd_validate(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - the CLI boundary maps failures to exit 2
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
