"""Bandit policies and the per-repetition simulation loop.

All randomness is baked into an ``EnvData`` object before any policy runs:
contexts, true means, and realized rewards for every (round, arm) pair are
precomputed from named substreams. Policies are then pure functions of that
data, which makes runs replayable and lets different policies face byte-for-
byte identical environments within a repetition.

Policies:

* hope: round-robin exploration for 2NK rounds, then commit to the arm with
  the best pointwise estimate each round, recomputed per query from the
  frozen exploration data.
* lasso-etc / rdl-etc: explore-then-commit with a single per-arm lasso or
  minimum-norm fit at the end of exploration.
* lasso-bandit: forced-sampling warmup plus greedy selection on per-arm
  lasso fits, refit when an arm's sample count crosses 25, 50, 100, 200, ...
* lin-ucb: ridge regression per arm with an upper-confidence bonus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import ArmDataset, ConfigError, RngStream, StructuralError, SupportSet
from .environment import ScenarioSpec, build_scenario, sample_rounds
from .estimators import LassoConfig, fit_lasso, fit_rdl, initial_lambda
from .pwe import LAMBDA_FLOOR, PweConfig, estimate_with_prep, prepare_arm

POLICY_NAMES = ("hope", "lasso-etc", "rdl-etc", "lasso-bandit", "lin-ucb")

N_MODES = ("agnostic", "aware")

_HINTS = ("s1", "s2", "s2-a", "s2-b", "s3", "s4")


@dataclass(frozen=True)
class PolicySpec:
    """One policy column of the benchmark grid.

    exploration_n: per-arm half-dataset size N for hope (2N pulls per arm),
        or pulls per arm for the two ETC baselines. None means the
        parameter-agnostic choose_N default (ETC baselines take 2x that, so
        every explore-then-commit policy spends the same number of rounds
        exploring). Ignored by lasso-bandit and lin-ucb.
    pwe: pointwise-estimator settings (hope only).
    ucb_alpha / ridge_reg: lin-ucb bonus weight and ridge penalty.
    """

    name: str
    exploration_n: int | None = None
    pwe: PweConfig = field(default_factory=PweConfig)
    ucb_alpha: float = 1.0
    ridge_reg: float = 1.0

    def __post_init__(self) -> None:
        if self.name not in POLICY_NAMES:
            raise ConfigError(f"unknown policy {self.name!r}; expected one of {POLICY_NAMES}")
        if self.exploration_n is not None and self.exploration_n < 1:
            raise ConfigError(f"exploration_n must be >= 1, got {self.exploration_n}")
        if self.ucb_alpha < 0:
            raise ConfigError(f"ucb_alpha must be >= 0, got {self.ucb_alpha}")
        if self.ridge_reg <= 0:
            raise ConfigError(f"ridge_reg must be positive, got {self.ridge_reg}")


@dataclass(frozen=True)
class RegretTrace:
    """Cumulative regret and arm choices of one (scenario, policy, rep) run."""

    scenario: str
    policy: str
    repetition: int
    seed: int
    cumulative: np.ndarray
    choices: np.ndarray

    def __post_init__(self) -> None:
        cum = np.asarray(self.cumulative, dtype=np.float64)
        cho = np.asarray(self.choices, dtype=np.int64)
        if cum.ndim != 1 or cho.shape != cum.shape:
            raise StructuralError("cumulative and choices must be 1-D and equally long")
        if cum.size and (cum[0] < -1e-12 or np.any(np.diff(cum) < -1e-12)):
            raise StructuralError("cumulative regret must be nondecreasing")
        object.__setattr__(self, "cumulative", cum)
        object.__setattr__(self, "choices", cho)


def choose_n_raw(scenario_hint: str, K: int, T: int, *, mode: str = "agnostic",
                 s0: int | None = None, p: int | None = None, a: float | None = None,
                 b: float | None = None, c: float | None = None,
                 M: int | None = None) -> int:
    """Rounded exploration half-size from the rate formulas, before clamping.

    mode "aware" uses the problem-parameter forms (s1 needs s0; s2/s2-a
    needs p and a; s2-b needs b and c; s3 needs M; s4 needs s0, p, a).
    mode "agnostic" needs K and T only.
    """
    if scenario_hint == "s2":
        scenario_hint = "s2-a"
    if scenario_hint not in _HINTS:
        raise ConfigError(f"unknown scenario hint {scenario_hint!r}; expected one of {_HINTS}")
    if mode not in N_MODES:
        raise ConfigError(f"mode must be one of {N_MODES}, got {mode!r}")
    if K < 2 or T < 1:
        raise ConfigError(f"need K >= 2 and T >= 1, got K={K}, T={T}")

    if mode == "agnostic":
        if scenario_hint == "s2-a":
            value = max(K**-0.5 * T**0.5, K ** (-2 / 3) * T ** (1 / 3))
        elif scenario_hint == "s2-b":
            value = K**-0.5 * T**0.5
        else:
            value = K ** (-2 / 3) * T ** (2 / 3)
        return int(round(value))

    def sparse_term(s: int) -> float:
        return K ** (-2 / 3) * s ** (1 / 3) * T ** (2 / 3)

    def fast_decay_terms(pp: int, aa: float) -> float:
        ta = T**aa
        return max(K**-0.5 * pp ** (1.0 / (2.0 * ta)) * T ** ((aa + 2.0) / 4.0),
                   K ** (-2 / 3) * pp ** (2.0 / (3.0 * ta)) * T ** ((2.0 - aa) / 3.0))

    if scenario_hint == "s1":
        if s0 is None or s0 < 1:
            raise ConfigError("aware mode for s1 needs the sparsity level s0 >= 1")
        value = sparse_term(s0)
    elif scenario_hint == "s2-a":
        if p is None or p < 2 or a is None or not (0.0 < a < 1.0):
            raise ConfigError("aware mode for s2 needs p >= 2 and decay exponent a in (0, 1)")
        value = fast_decay_terms(p, a)
    elif scenario_hint == "s2-b":
        if b is None or not (0.0 < b < 1.0) or c is None or not (1.0 < c < 1.0 / (1.0 - b)):
            raise ConfigError("aware mode for s2-b needs b in (0, 1) and c in (1, 1/(1-b))")
        value = min(K**-0.5 * T ** (0.5 + c * (2.0 - b) / 4.0),
                    K**-0.5 * T ** (0.5 + 3.0 * c * (1.0 - b) / 4.0))
    elif scenario_hint == "s3":
        if M is None or M < 1:
            raise ConfigError("aware mode for s3 needs the sparsity level M >= 1")
        value = K ** (-2 / 3) * M ** (2 / 3) * T ** (2 / 3)
    else:
        if s0 is None or s0 < 1 or p is None or p < 2 or a is None or not (0.0 < a < 1.0):
            raise ConfigError("aware mode for s4 needs s0 >= 1, p >= 2, and a in (0, 1)")
        value = max(sparse_term(s0), fast_decay_terms(p, a))
    return int(round(value))


def choose_N(scenario_hint: str, K: int, T: int, *, mode: str = "agnostic",
             s0: int | None = None, p: int | None = None, a: float | None = None,
             b: float | None = None, c: float | None = None, M: int | None = None) -> int:
    """Exploration half-size, clamped into [2, T // (2K)].

    Requires T >= 4K so the clamp window is nonempty (an N of at least 2
    must fit inside the horizon).
    """
    if T < 4 * K:
        raise ConfigError(f"horizon too short for exploration: need T >= 4K, got T={T}, K={K}")
    raw = choose_n_raw(scenario_hint, K, T, mode=mode, s0=s0, p=p, a=a, b=b, c=c, M=M)
    return int(min(max(raw, 2), T // (2 * K)))


@dataclass(frozen=True)
class EnvData:
    """A fully realized environment: contexts, true means, rewards."""

    scenario: ScenarioSpec
    contexts: np.ndarray
    mus: np.ndarray
    rewards: np.ndarray
    repetition: int
    seed: int

    def __post_init__(self) -> None:
        T, K, p = self.scenario.T, self.scenario.K, self.scenario.p
        if self.contexts.shape != (T, K, p):
            raise StructuralError(f"contexts shape {self.contexts.shape} != {(T, K, p)}")
        if self.mus.shape != (T, K) or self.rewards.shape != (T, K):
            raise StructuralError("mus and rewards must have shape (T, K)")

    @property
    def sigma(self) -> float:
        return self.scenario.sigma


def make_env_data(scenario_id: str, repetition: int, master_seed: int,
                  scenario_overrides: dict | None = None) -> EnvData:
    """Realize one repetition of a scenario from its named substreams.

    The "env" stream draws the instance (coefficients, covariance scales),
    "contexts" the context tensor, "noise" the reward noise. None of them
    depends on the policy, so all policies of a repetition are paired.
    """
    overrides = dict(scenario_overrides or {})
    env_stream = RngStream(master_seed, scenario_id, repetition, "env")
    spec = build_scenario(scenario_id, env_stream.generator(), **overrides)
    contexts = sample_rounds(
        spec, spec.T, RngStream(master_seed, scenario_id, repetition, "contexts").generator()
    )
    noise = RngStream(master_seed, scenario_id, repetition, "noise").generator().standard_normal(
        (spec.T, spec.K)
    )
    thetas = np.stack([arm.theta for arm in spec.arms])
    mus = np.einsum("tkp,kp->tk", contexts, thetas)
    rewards = mus + spec.sigma * noise
    return EnvData(scenario=spec, contexts=contexts, mus=mus, rewards=rewards,
                   repetition=repetition, seed=env_stream.sub_seed())


def oracle_regret_increment(mus_row: np.ndarray, choice: int) -> float:
    """Instantaneous regret of pulling `choice` against the best arm."""
    mus_row = np.asarray(mus_row, dtype=np.float64)
    if not 0 <= choice < mus_row.shape[0]:
        raise StructuralError(f"choice {choice} out of range for {mus_row.shape[0]} arms")
    return float(np.max(mus_row) - mus_row[choice])


def _trace(env: EnvData, policy_name: str, choices: np.ndarray) -> RegretTrace:
    T = env.scenario.T
    best = env.mus.max(axis=1)
    increments = best - env.mus[np.arange(T), choices]
    return RegretTrace(
        scenario=env.scenario.scenario_id,
        policy=policy_name,
        repetition=env.repetition,
        seed=env.seed,
        cumulative=np.cumsum(increments),
        choices=choices,
    )


def resolve_exploration_n(policy: PolicySpec, scenario: ScenarioSpec) -> int:
    """Per-arm exploration parameter for hope (N) or the ETC baselines (N')."""
    if policy.name == "hope":
        n = policy.exploration_n
        if n is None:
            n = choose_N(scenario.scenario_id, scenario.K, scenario.T)
        if 2 * n * scenario.K > scenario.T:
            raise ConfigError(
                f"policy hope needs 2*N*K <= T, got N={n}, K={scenario.K}, T={scenario.T}"
            )
        return int(n)
    if policy.name in ("lasso-etc", "rdl-etc"):
        n = policy.exploration_n
        if n is None:
            n = 2 * choose_N(scenario.scenario_id, scenario.K, scenario.T)
        if n * scenario.K > scenario.T:
            raise ConfigError(
                f"policy {policy.name} needs N*K <= T, got N={n}, K={scenario.K}, T={scenario.T}"
            )
        return int(n)
    raise ConfigError(f"policy {policy.name} has no exploration parameter")


def validate_pair(policy: PolicySpec, scenario: ScenarioSpec) -> None:
    """Raise ConfigError when the policy cannot run on the scenario."""
    if policy.name in ("hope", "lasso-etc", "rdl-etc"):
        resolve_exploration_n(policy, scenario)


def run_hope(env: EnvData, policy: PolicySpec, *,
             support_overrides: list[SupportSet] | None = None,
             theta_overrides: list[np.ndarray] | None = None) -> RegretTrace:
    """Explore round-robin for 2NK rounds, then commit to the pointwise argmax.

    Each arm's support and initial estimate are computed once from its frozen
    exploration data; the transformed solve is redone for every query. The
    override lists inject per-arm supports or coefficient vectors (tests).
    """
    spec = env.scenario
    K, T, sigma = spec.K, spec.T, spec.sigma
    n_half = resolve_exploration_n(policy, spec)
    t0 = 2 * n_half * K

    choices = np.empty(T, dtype=np.int64)
    choices[:t0] = np.arange(t0) % K

    preps = []
    for i in range(K):
        rounds_i = np.arange(i, t0, K)
        dataset = ArmDataset(
            arm_id=i,
            contexts=env.contexts[rounds_i, i, :],
            rewards=env.rewards[rounds_i, i],
            split_point=n_half,
        )
        preps.append(prepare_arm(
            dataset, policy.pwe, sigma,
            support_override=None if support_overrides is None else support_overrides[i],
            theta_override=None if theta_overrides is None else theta_overrides[i],
        ))

    scores = np.empty(K)
    for t in range(t0, T):
        for i in range(K):
            scores[i] = estimate_with_prep(preps[i], env.contexts[t, i], policy.pwe, sigma)
        choices[t] = int(np.argmax(scores))
    return _trace(env, policy.name, choices)


def run_etc_baseline(env: EnvData, policy: PolicySpec) -> RegretTrace:
    """Explore-then-commit with one full-dimensional fit per arm.

    lasso-etc fits the l1 path estimator at lambda = sigma sqrt(log p / N');
    rdl-etc fits the minimum-norm interpolator. The commit phase is greedy
    on the fitted linear scores.
    """
    if policy.name not in ("lasso-etc", "rdl-etc"):
        raise ConfigError(f"run_etc_baseline got policy {policy.name!r}")
    spec = env.scenario
    K, T, p, sigma = spec.K, spec.T, spec.p, spec.sigma
    n_explore = resolve_exploration_n(policy, spec)
    t0 = n_explore * K

    choices = np.empty(T, dtype=np.int64)
    choices[:t0] = np.arange(t0) % K

    theta_hat = np.empty((K, p))
    for i in range(K):
        rounds_i = np.arange(i, t0, K)
        X = env.contexts[rounds_i, i, :]
        y = env.rewards[rounds_i, i]
        if policy.name == "lasso-etc":
            lam = max(initial_lambda(sigma, p, n_explore), LAMBDA_FLOOR)
            theta_hat[i] = fit_lasso(X, y, LassoConfig(lam=lam)).values
        else:
            theta_hat[i] = fit_rdl(X, y).values

    if t0 < T:
        scores = np.einsum("tkp,kp->tk", env.contexts[t0:], theta_hat)
        choices[t0:] = np.argmax(scores, axis=1)
    return _trace(env, policy.name, choices)


def run_lin_ucb(env: EnvData, policy: PolicySpec) -> RegretTrace:
    """Ridge regression with an upper-confidence exploration bonus.

    One shared coefficient vector scores every arm's context, as in the
    classic linear-payoff UCB formulation: each round picks
    argmax_i <x_i, theta> + ucb_alpha * sqrt(x_i' A^{-1} x_i) and feeds the
    chosen (context, reward) pair back into the single ridge state via a
    Sherman-Morrison rank-1 update.
    """
    if policy.name != "lin-ucb":
        raise ConfigError(f"run_lin_ucb got policy {policy.name!r}")
    spec = env.scenario
    K, T, p = spec.K, spec.T, spec.p
    alpha = policy.ucb_alpha

    a_inv = np.eye(p) / policy.ridge_reg
    b = np.zeros(p)
    theta = np.zeros(p)
    choices = np.empty(T, dtype=np.int64)
    scores = np.empty(K)

    for t in range(T):
        xs = env.contexts[t]
        for i in range(K):
            width = float(xs[i] @ (a_inv @ xs[i]))
            scores[i] = float(xs[i] @ theta) + alpha * math.sqrt(max(width, 0.0))
        chosen = int(np.argmax(scores))
        choices[t] = chosen
        x = xs[chosen]
        ax = a_inv @ x
        a_inv -= np.outer(ax, ax) / (1.0 + float(x @ ax))
        b += env.rewards[t, chosen] * x
        theta = a_inv @ b
    return _trace(env, policy.name, choices)


LASSO_BANDIT_WARMUP = 25
LASSO_BANDIT_SWEEP_GAP = 50


def run_lasso_bandit(env: EnvData, policy: PolicySpec) -> RegretTrace:
    """Forced sampling plus greedy selection on per-arm lasso fits.

    The first 25 pulls per arm are a forced round-robin block; afterwards one
    forced round-robin sweep runs every 50 rounds and the remaining rounds
    are greedy on the current fits. An arm is refit exactly when its sample
    count crosses 25, 50, 100, 200, ... (doubling), with penalty
    sigma sqrt(log p / n_i).
    """
    if policy.name != "lasso-bandit":
        raise ConfigError(f"run_lasso_bandit got policy {policy.name!r}")
    spec = env.scenario
    K, T, p, sigma = spec.K, spec.T, spec.p, spec.sigma

    warmup_rounds = LASSO_BANDIT_WARMUP * K
    theta = np.zeros((K, p))
    counts = np.zeros(K, dtype=np.int64)
    next_refit = np.full(K, LASSO_BANDIT_WARMUP, dtype=np.int64)
    rows: list[list[int]] = [[] for _ in range(K)]
    choices = np.empty(T, dtype=np.int64)

    for t in range(T):
        if t < warmup_rounds:
            chosen = t % K
        else:
            offset = (t - warmup_rounds) % LASSO_BANDIT_SWEEP_GAP
            if offset < K:
                chosen = offset
            else:
                chosen = int(np.argmax(np.einsum("kp,kp->k", env.contexts[t], theta)))
        choices[t] = chosen
        rows[chosen].append(t)
        counts[chosen] += 1
        if counts[chosen] == next_refit[chosen]:
            idx = np.asarray(rows[chosen], dtype=np.intp)
            X = env.contexts[idx, chosen, :]
            y = env.rewards[idx, chosen]
            lam = max(initial_lambda(sigma, p, int(counts[chosen])), LAMBDA_FLOOR)
            theta[chosen] = fit_lasso(X, y, LassoConfig(lam=lam)).values
            next_refit[chosen] *= 2
    return _trace(env, policy.name, choices)


def run_oracle(env: EnvData) -> RegretTrace:
    """Cheating reference: always pull the true best arm (zero regret)."""
    choices = np.argmax(env.mus, axis=1).astype(np.int64)
    return _trace(env, "oracle", choices)


def run_policy(env: EnvData, policy: PolicySpec) -> RegretTrace:
    """Dispatch one policy run on a realized environment."""
    if policy.name == "hope":
        return run_hope(env, policy)
    if policy.name in ("lasso-etc", "rdl-etc"):
        return run_etc_baseline(env, policy)
    if policy.name == "lin-ucb":
        return run_lin_ucb(env, policy)
    if policy.name == "lasso-bandit":
        return run_lasso_bandit(env, policy)
    raise ConfigError(f"unknown policy {policy.name!r}")
