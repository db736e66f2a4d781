"""Experiment configuration: a single YAML file describing the grid.

Top-level keys: master_seed, repetitions, scenarios, policies, and the
optional output_dir and jobs. Every validation error names the exact key
path it objects to.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .bandit import POLICY_NAMES, PolicySpec, validate_pair
from .core import ConfigError, RngStream
from .environment import SCENARIO_IDS, ScenarioSpec, build_scenario
from .pwe import PweConfig

_SCENARIO_KEYS = {"id", "K", "T", "p", "noise_variance", "sparse_ratio", "dense_ratio"}
_POLICY_KEYS = {"name", "exploration_n", "pwe", "ucb_alpha", "ridge_reg"}
_PWE_KEYS = {"initial_estimator", "support_rule", "lambda_const", "initial_lambda_const",
             "gamma_sigma_tol"}
_TOP_KEYS = {"master_seed", "repetitions", "output_dir", "jobs", "scenarios", "policies"}


@dataclass(frozen=True)
class ScenarioConfig:
    """One scenario row: a family id plus keyword overrides for build_scenario."""

    scenario_id: str
    overrides: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ExperimentConfig:
    master_seed: int
    repetitions: int
    scenarios: tuple[ScenarioConfig, ...]
    policies: tuple[PolicySpec, ...]
    output_dir: str | None = None
    jobs: int | None = None


def _expect_mapping(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected a mapping, got {type(value).__name__}")
    return value


def _expect_list(value, path: str) -> list:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{path}: expected a nonempty list")
    return value


def _reject_unknown(mapping: dict, allowed: set, path: str) -> None:
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {', '.join(map(repr, unknown))}")


def _as_int(value, path: str, lo: int | None = None, hi: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    if lo is not None and value < lo:
        raise ConfigError(f"{path}: must be >= {lo}, got {value}")
    if hi is not None and value > hi:
        raise ConfigError(f"{path}: must be <= {hi}, got {value}")
    return value


def _as_float(value, path: str, *, positive: bool = False, nonnegative: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    value = float(value)
    if positive and value <= 0:
        raise ConfigError(f"{path}: must be positive, got {value}")
    if nonnegative and value < 0:
        raise ConfigError(f"{path}: must be >= 0, got {value}")
    return value


def _as_choice(value, path: str, choices) -> str:
    if value not in choices:
        raise ConfigError(f"{path}: expected one of {tuple(choices)}, got {value!r}")
    return value


def _parse_scenario(entry, path: str) -> ScenarioConfig:
    entry = _expect_mapping(entry, path)
    _reject_unknown(entry, _SCENARIO_KEYS, path)
    if "id" not in entry:
        raise ConfigError(f"{path}.id: missing required key")
    scenario_id = _as_choice(entry["id"], f"{path}.id", SCENARIO_IDS)
    overrides = {}
    for key, caster in (
        ("K", lambda v, kp: _as_int(v, kp, lo=2)),
        ("T", lambda v, kp: _as_int(v, kp, lo=1)),
        ("p", lambda v, kp: _as_int(v, kp, lo=2)),
        ("noise_variance", lambda v, kp: _as_float(v, kp, nonnegative=True)),
        ("sparse_ratio", lambda v, kp: _as_float(v, kp, positive=True)),
        ("dense_ratio", lambda v, kp: _as_float(v, kp, positive=True)),
    ):
        if key in entry:
            overrides[key] = caster(entry[key], f"{path}.{key}")
    return ScenarioConfig(scenario_id=scenario_id, overrides=overrides)


def _parse_pwe(entry, path: str) -> PweConfig:
    entry = _expect_mapping(entry, path)
    _reject_unknown(entry, _PWE_KEYS, path)
    kwargs = {}
    if "initial_estimator" in entry:
        kwargs["initial_estimator"] = _as_choice(
            entry["initial_estimator"], f"{path}.initial_estimator",
            ("lasso", "rdl", "cross-validated"))
    if "support_rule" in entry:
        kwargs["support_rule"] = _as_choice(
            entry["support_rule"], f"{path}.support_rule", ("lasso-support", "sis", "full"))
    if "lambda_const" in entry:
        kwargs["lambda_const"] = _as_float(entry["lambda_const"], f"{path}.lambda_const", positive=True)
    if "initial_lambda_const" in entry:
        kwargs["initial_lambda_const"] = _as_float(
            entry["initial_lambda_const"], f"{path}.initial_lambda_const", positive=True)
    if "gamma_sigma_tol" in entry:
        kwargs["gamma_sigma_tol"] = _as_float(
            entry["gamma_sigma_tol"], f"{path}.gamma_sigma_tol", positive=True)
    return PweConfig(**kwargs)


def _parse_policy(entry, path: str) -> PolicySpec:
    entry = _expect_mapping(entry, path)
    _reject_unknown(entry, _POLICY_KEYS, path)
    if "name" not in entry:
        raise ConfigError(f"{path}.name: missing required key")
    name = _as_choice(entry["name"], f"{path}.name", POLICY_NAMES)
    kwargs: dict = {"name": name}
    if "exploration_n" in entry and entry["exploration_n"] is not None:
        kwargs["exploration_n"] = _as_int(entry["exploration_n"], f"{path}.exploration_n", lo=1)
    if "pwe" in entry:
        if name != "hope":
            raise ConfigError(f"{path}.pwe: only the hope policy takes pwe settings")
        kwargs["pwe"] = _parse_pwe(entry["pwe"], f"{path}.pwe")
    if "ucb_alpha" in entry:
        kwargs["ucb_alpha"] = _as_float(entry["ucb_alpha"], f"{path}.ucb_alpha", nonnegative=True)
    if "ridge_reg" in entry:
        kwargs["ridge_reg"] = _as_float(entry["ridge_reg"], f"{path}.ridge_reg", positive=True)
    return PolicySpec(**kwargs)


def parse_config(raw, *, source: str = "config") -> ExperimentConfig:
    """Validate a parsed YAML document into an ExperimentConfig."""
    raw = _expect_mapping(raw, source)
    _reject_unknown(raw, _TOP_KEYS, source)

    master_seed = _as_int(raw.get("master_seed", 0), f"{source}.master_seed", lo=0, hi=2**64 - 1)
    repetitions = _as_int(raw.get("repetitions", 1), f"{source}.repetitions", lo=1)
    jobs = None
    if raw.get("jobs") is not None:
        jobs = _as_int(raw["jobs"], f"{source}.jobs", lo=1)
    output_dir = raw.get("output_dir")
    if output_dir is not None and not isinstance(output_dir, str):
        raise ConfigError(f"{source}.output_dir: expected a string path")

    scenarios = tuple(
        _parse_scenario(entry, f"{source}.scenarios[{i}]")
        for i, entry in enumerate(_expect_list(raw.get("scenarios"), f"{source}.scenarios"))
    )
    seen_ids = [s.scenario_id for s in scenarios]
    for sid in seen_ids:
        if seen_ids.count(sid) > 1:
            raise ConfigError(f"{source}.scenarios: duplicate scenario id {sid!r}")

    policies = tuple(
        _parse_policy(entry, f"{source}.policies[{i}]")
        for i, entry in enumerate(_expect_list(raw.get("policies"), f"{source}.policies"))
    )
    seen_names = [p.name for p in policies]
    for name in seen_names:
        if seen_names.count(name) > 1:
            raise ConfigError(f"{source}.policies: duplicate policy {name!r}")

    return ExperimentConfig(master_seed=master_seed, repetitions=repetitions,
                            scenarios=scenarios, policies=policies,
                            output_dir=output_dir, jobs=jobs)


def load_config(path) -> ExperimentConfig:
    """Read and validate a YAML config file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from exc
    return parse_config(raw, source=path.name)


def scenario_template(scenario: ScenarioConfig, master_seed: int) -> ScenarioSpec:
    """A throwaway instance of the scenario (repetition 0), for validation."""
    rng = RngStream(master_seed, scenario.scenario_id, 0, "env").generator()
    return build_scenario(scenario.scenario_id, rng, **scenario.overrides)


def feasibility_problems(config: ExperimentConfig) -> list[str]:
    """Messages for every (scenario, policy) pair that cannot run."""
    problems = []
    for scenario in config.scenarios:
        try:
            spec = scenario_template(scenario, config.master_seed)
        except ConfigError as exc:
            problems.append(f"scenario {scenario.scenario_id}: {exc}")
            continue
        for policy in config.policies:
            try:
                validate_pair(policy, spec)
            except ConfigError as exc:
                problems.append(f"scenario {scenario.scenario_id} / policy {policy.name}: {exc}")
    return problems
