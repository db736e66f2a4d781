"""Synthetic contextual-bandit environments.

Each arm has its own sparse-or-dense coefficient vector and its own diagonal
context covariance. Four named scenario families cover the benchmark grid:

* s1: identity covariance, sparse coefficients, for every arm.
* s2: polynomially decaying covariance (exponent -1 + 1/T, per-arm scale
  drawn uniformly from [0.5, 1.5]), dense coefficients.
* s3: the s2 covariances with sparse coefficients.
* s4: a mix, arms 0-1 from the s1 family and the rest from the s2 family.

Contexts are drawn independently across arms and rounds; rewards are the
linear mean plus centered Gaussian noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ConfigError, StructuralError

SCENARIO_IDS = ("s1", "s2", "s3", "s4")

_COVARIANCE_KINDS = ("identity", "decay-a", "decay-b", "experiment-decay")


@dataclass(frozen=True)
class CovarianceSpec:
    """A diagonal context covariance, described by its eigenvalue law.

    kind "identity" is the unit spectrum; "decay-a" uses k^-(1 + 1/T^a) with
    a in (0, 1); "decay-b" uses k^-b with b in (0, 1) and a growth exponent
    c in (1, 1/(1-b)); "experiment-decay" uses k^(-1 + 1/T). scale multiplies
    the whole spectrum.
    """

    kind: str
    dim: int
    a: float | None = None
    b: float | None = None
    c: float | None = None
    scale: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in _COVARIANCE_KINDS:
            raise ConfigError(f"covariance kind must be one of {_COVARIANCE_KINDS}, got {self.kind!r}")
        if self.dim < 1:
            raise ConfigError(f"covariance dim must be >= 1, got {self.dim}")
        if self.scale <= 0:
            raise ConfigError(f"covariance scale must be positive, got {self.scale}")
        if self.kind == "decay-a":
            if self.a is None or not (0.0 < self.a < 1.0):
                raise ConfigError(f"decay-a needs exponent a in (0, 1), got {self.a}")
        if self.kind == "decay-b":
            if self.b is None or not (0.0 < self.b < 1.0):
                raise ConfigError(f"decay-b needs exponent b in (0, 1), got {self.b}")
            if self.c is None or not (1.0 < self.c < 1.0 / (1.0 - self.b)):
                raise ConfigError(
                    f"decay-b needs growth exponent c in (1, 1/(1-b)) = (1, {1.0 / (1.0 - self.b):g}), got {self.c}"
                )


def make_covariance(spec: CovarianceSpec, T: int) -> np.ndarray:
    """Eigenvalue vector (length dim, strictly positive, nonincreasing)."""
    if T < 1:
        raise ConfigError(f"horizon T must be >= 1, got {T}")
    k = np.arange(1, spec.dim + 1, dtype=np.float64)
    if spec.kind == "identity":
        eigs = np.ones(spec.dim)
    elif spec.kind == "decay-a":
        eigs = k ** -(1.0 + 1.0 / T**spec.a)
    elif spec.kind == "decay-b":
        eigs = k**-spec.b
    else:
        eigs = k ** (-1.0 + 1.0 / T)
    return spec.scale * eigs


@dataclass(frozen=True)
class ArmModel:
    """One arm: coefficient vector, context covariance, sparsity bookkeeping."""

    theta: np.ndarray
    covariance: CovarianceSpec
    sparsity_ratio: float

    def __post_init__(self) -> None:
        theta = np.asarray(self.theta, dtype=np.float64)
        if theta.ndim != 1:
            raise StructuralError("theta must be 1-D")
        if not np.all(np.isfinite(theta)):
            raise StructuralError("theta contains non-finite entries")
        if theta.shape[0] != self.covariance.dim:
            raise StructuralError("theta length does not match the covariance dimension")
        if not (0.0 < self.sparsity_ratio <= 1.0):
            raise StructuralError(f"sparsity_ratio must be in (0, 1], got {self.sparsity_ratio}")
        expected = int(round(self.sparsity_ratio * theta.shape[0]))
        actual = int(np.count_nonzero(theta))
        if actual != expected:
            raise StructuralError(
                f"theta has {actual} nonzeros but sparsity_ratio {self.sparsity_ratio} implies {expected}"
            )
        object.__setattr__(self, "theta", theta)


@dataclass(frozen=True)
class ScenarioSpec:
    """A full environment instance: K arms over horizon T in dimension p."""

    scenario_id: str
    K: int
    T: int
    p: int
    noise_variance: float
    arms: tuple[ArmModel, ...]

    def __post_init__(self) -> None:
        if self.K < 2:
            raise ConfigError(f"need at least 2 arms, got K={self.K}")
        if self.T < 1:
            raise ConfigError(f"horizon must be >= 1, got T={self.T}")
        if self.p < 2:
            raise ConfigError(f"context dimension must be >= 2, got p={self.p}")
        if self.noise_variance < 0:
            raise ConfigError(f"noise_variance must be >= 0, got {self.noise_variance}")
        if len(self.arms) != self.K:
            raise StructuralError(f"expected {self.K} arms, got {len(self.arms)}")
        for arm in self.arms:
            if arm.covariance.dim != self.p:
                raise StructuralError("arm dimension does not match the scenario dimension")
        object.__setattr__(self, "arms", tuple(self.arms))

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.noise_variance))


def _draw_theta(rng: np.random.Generator, p: int, ratio: float) -> np.ndarray:
    """Sparse coefficient draw: round(ratio*p) standard normal entries at
    uniformly chosen positions (without replacement), zeros elsewhere."""
    n_nonzero = int(round(ratio * p))
    if n_nonzero < 1:
        raise ConfigError(f"sparsity_ratio {ratio} leaves no nonzero coordinate at p={p}")
    positions = rng.choice(p, size=n_nonzero, replace=False)
    values = rng.standard_normal(n_nonzero)
    theta = np.zeros(p)
    theta[positions] = values
    # a drawn value could be exactly 0.0 only with probability 0; guard anyway
    while np.count_nonzero(theta) != n_nonzero:
        zero_pos = positions[theta[positions] == 0.0]
        theta[zero_pos] = rng.standard_normal(zero_pos.size)
    return theta


def build_scenario(scenario_id: str, rng: np.random.Generator, *, K: int = 5,
                   T: int = 500, p: int = 200, noise_variance: float = 0.1,
                   sparse_ratio: float = 0.1, dense_ratio: float = 0.9) -> ScenarioSpec:
    """Draw a fresh instance of one of the four scenario families.

    Per-arm draw order is fixed (covariance scale where applicable, then
    support positions, then values), so a given generator state always
    produces the same instance.
    """
    if scenario_id not in SCENARIO_IDS:
        raise ConfigError(f"unknown scenario {scenario_id!r}; expected one of {SCENARIO_IDS}")
    if scenario_id == "s4" and K < 3:
        raise ConfigError(f"scenario s4 mixes two arm families and needs K >= 3, got K={K}")

    identity = CovarianceSpec(kind="identity", dim=p)
    arms = []
    for i in range(K):
        if scenario_id == "s1":
            sparse, cov = True, identity
        elif scenario_id == "s2":
            sparse = False
            cov = CovarianceSpec(kind="experiment-decay", dim=p, scale=float(rng.uniform(0.5, 1.5)))
        elif scenario_id == "s3":
            sparse = True
            cov = CovarianceSpec(kind="experiment-decay", dim=p, scale=float(rng.uniform(0.5, 1.5)))
        else:
            sparse = i < 2
            if sparse:
                cov = identity
            else:
                cov = CovarianceSpec(kind="experiment-decay", dim=p, scale=float(rng.uniform(0.5, 1.5)))
        ratio = sparse_ratio if sparse else dense_ratio
        arms.append(ArmModel(theta=_draw_theta(rng, p, ratio), covariance=cov, sparsity_ratio=ratio))
    return ScenarioSpec(scenario_id=scenario_id, K=K, T=T, p=p,
                        noise_variance=noise_variance, arms=tuple(arms))


def sample_rounds(spec: ScenarioSpec, n_rounds: int, rng: np.random.Generator) -> np.ndarray:
    """Contexts for n_rounds rounds, shape (n_rounds, K, p).

    Arm blocks are drawn in arm order; within an arm, coordinates scale by
    the square root of its covariance eigenvalues.
    """
    if n_rounds < 1:
        raise StructuralError(f"n_rounds must be >= 1, got {n_rounds}")
    out = np.empty((n_rounds, spec.K, spec.p))
    for i, arm in enumerate(spec.arms):
        sd = np.sqrt(make_covariance(arm.covariance, spec.T))
        out[:, i, :] = rng.standard_normal((n_rounds, spec.p)) * sd
    return out


def sample_round(spec: ScenarioSpec, rng: np.random.Generator) -> np.ndarray:
    """One round of contexts, shape (K, p)."""
    return sample_rounds(spec, 1, rng)[0]


def reward(x, arm: ArmModel, sigma: float, rng: np.random.Generator) -> float:
    """One noisy reward draw: <x, theta> + sigma * standard normal."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != arm.theta.shape:
        raise StructuralError("context does not match the arm dimension")
    if sigma < 0:
        raise StructuralError(f"sigma must be >= 0, got {sigma}")
    return float(x @ arm.theta + sigma * rng.standard_normal())
