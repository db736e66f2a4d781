"""Benchmark grid runner and delimited outputs.

A run covers every (scenario, policy, repetition) cell of the config. Cells
of one repetition share their realized environment, so policy curves are
paired. Outputs are two CSV files with fixed schemas:

* raw_traces.csv: scenario,policy,repetition,seed,round,cumulative_regret
* aggregate.csv:  scenario,policy,round,mean,std

Floats are written in shortest round-trip form and rows in a fixed order,
so identical configs and seeds produce byte-identical files.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from multiprocessing import Pool
from pathlib import Path

import numpy as np

from .bandit import PolicySpec, RegretTrace, make_env_data, run_policy, validate_pair
from .config import ExperimentConfig, ScenarioConfig, scenario_template
from .core import ConfigError, StructuralError

RAW_CSV_NAME = "raw_traces.csv"
AGGREGATE_CSV_NAME = "aggregate.csv"

RAW_HEADER = ["scenario", "policy", "repetition", "seed", "round", "cumulative_regret"]
AGGREGATE_HEADER = ["scenario", "policy", "round", "mean", "std"]


@dataclass(frozen=True)
class AggregateResult:
    """Pointwise mean and population std of one (scenario, policy) group."""

    scenario: str
    policy: str
    mean: np.ndarray
    std: np.ndarray
    n_reps: int

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=np.float64)
        std = np.asarray(self.std, dtype=np.float64)
        if mean.ndim != 1 or std.shape != mean.shape:
            raise StructuralError("mean and std must be 1-D and equally long")
        if self.n_reps < 1:
            raise StructuralError("aggregate needs at least one repetition")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)


@dataclass(frozen=True)
class ExperimentResult:
    traces: tuple[RegretTrace, ...]
    aggregates: tuple[AggregateResult, ...]
    skipped: tuple[str, ...]


def aggregate(traces) -> AggregateResult:
    """Mean and population standard deviation across one group's repetitions."""
    traces = list(traces)
    if not traces:
        raise StructuralError("cannot aggregate an empty trace list")
    key = (traces[0].scenario, traces[0].policy)
    length = traces[0].cumulative.shape[0]
    for t in traces:
        if (t.scenario, t.policy) != key:
            raise StructuralError(f"aggregate got mixed groups: {key} and {(t.scenario, t.policy)}")
        if t.cumulative.shape[0] != length:
            raise StructuralError("aggregate got traces of different lengths")
    stack = np.stack([t.cumulative for t in traces])
    return AggregateResult(scenario=key[0], policy=key[1],
                           mean=stack.mean(axis=0), std=stack.std(axis=0),
                           n_reps=len(traces))


def aggregate_all(traces) -> tuple[AggregateResult, ...]:
    """Aggregate every (scenario, policy) group, in first-seen order."""
    groups: dict[tuple[str, str], list[RegretTrace]] = {}
    for t in traces:
        groups.setdefault((t.scenario, t.policy), []).append(t)
    return tuple(aggregate(group) for group in groups.values())


def filter_config(config: ExperimentConfig, *, scenario: str | None = None,
                  policy: str | None = None) -> ExperimentConfig:
    """Restrict the grid to one scenario and/or one policy."""
    scenarios = config.scenarios
    policies = config.policies
    if scenario is not None:
        scenarios = tuple(s for s in scenarios if s.scenario_id == scenario)
        if not scenarios:
            raise ConfigError(f"--scenario {scenario!r} is not in the config")
    if policy is not None:
        policies = tuple(p for p in policies if p.name == policy)
        if not policies:
            raise ConfigError(f"--policy {policy!r} is not in the config")
    return replace(config, scenarios=scenarios, policies=policies)


def _run_cell(args) -> list[RegretTrace]:
    scenario_cfg, policies, rep, master_seed = args
    env = make_env_data(scenario_cfg.scenario_id, rep, master_seed,
                        scenario_overrides=scenario_cfg.overrides)
    return [run_policy(env, policy) for policy in policies]


def run_experiment(config: ExperimentConfig, *, jobs: int = 1,
                   progress=None) -> ExperimentResult:
    """Run the whole grid and aggregate it.

    Infeasible (scenario, policy) pairs are reported in ``skipped`` and left
    out of the run; everything else proceeds. With jobs > 1, repetitions are
    distributed over a process pool; results keep a fixed order either way.
    """
    if jobs < 1:
        raise ConfigError(f"jobs must be >= 1, got {jobs}")

    skipped: list[str] = []
    runnable: dict[str, tuple[ScenarioConfig, tuple[PolicySpec, ...]]] = {}
    for scenario_cfg in config.scenarios:
        try:
            spec = scenario_template(scenario_cfg, config.master_seed)
        except ConfigError as exc:
            skipped.append(f"scenario {scenario_cfg.scenario_id}: {exc}")
            continue
        kept = []
        for policy in config.policies:
            try:
                validate_pair(policy, spec)
                kept.append(policy)
            except ConfigError as exc:
                skipped.append(f"scenario {scenario_cfg.scenario_id} / policy {policy.name}: {exc}")
        if kept:
            runnable[scenario_cfg.scenario_id] = (scenario_cfg, tuple(kept))

    tasks = [
        (scenario_cfg, policies, rep, config.master_seed)
        for scenario_cfg, policies in runnable.values()
        for rep in range(config.repetitions)
    ]

    traces: list[RegretTrace] = []

    def _collect(cell_results) -> None:
        for task, cell in zip(tasks, cell_results):
            traces.extend(cell)
            if progress is not None:
                progress(f"{task[0].scenario_id} rep {task[2]}: {len(cell)} traces")

    if jobs == 1 or len(tasks) <= 1:
        _collect(map(_run_cell, tasks))
    else:
        with Pool(processes=min(jobs, len(tasks))) as pool:
            _collect(pool.imap(_run_cell, tasks))

    return ExperimentResult(traces=tuple(traces),
                            aggregates=aggregate_all(traces),
                            skipped=tuple(skipped))


def _fmt(value: float) -> str:
    return repr(float(value))


def write_raw_csv(traces, path) -> Path:
    """Write per-round cumulative regret rows; rounds are 1-based."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RAW_HEADER)
        for t in traces:
            for round_idx, value in enumerate(t.cumulative, start=1):
                writer.writerow([t.scenario, t.policy, t.repetition, t.seed,
                                 round_idx, _fmt(value)])
    return path


def write_aggregate_csv(aggregates, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(AGGREGATE_HEADER)
        for agg in aggregates:
            for round_idx in range(agg.mean.shape[0]):
                writer.writerow([agg.scenario, agg.policy, round_idx + 1,
                                 _fmt(agg.mean[round_idx]), _fmt(agg.std[round_idx])])
    return path


def read_aggregate_csv(path) -> tuple[AggregateResult, ...]:
    """Load aggregate.csv back into AggregateResult groups (for plotting)."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"aggregate file not found: {path}")
    groups: dict[tuple[str, str], list[tuple[int, float, float]]] = {}
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != AGGREGATE_HEADER:
            raise ConfigError(
                f"{path}: expected header {','.join(AGGREGATE_HEADER)}, got {reader.fieldnames}")
        for lineno, row in enumerate(reader, start=2):
            try:
                key = (row["scenario"], row["policy"])
                groups.setdefault(key, []).append(
                    (int(row["round"]), float(row["mean"]), float(row["std"])))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{path}:{lineno}: malformed row: {exc}") from exc
    results = []
    for (scenario, policy), rows in groups.items():
        rows.sort(key=lambda r: r[0])
        rounds = [r[0] for r in rows]
        if rounds != list(range(1, len(rows) + 1)):
            raise ConfigError(f"{path}: rounds for {scenario}/{policy} are not contiguous from 1")
        results.append(AggregateResult(
            scenario=scenario, policy=policy,
            mean=np.array([r[1] for r in rows]),
            std=np.array([r[2] for r in rows]),
            n_reps=1,
        ))
    if not results:
        raise ConfigError(f"{path}: no aggregate rows")
    return tuple(results)
