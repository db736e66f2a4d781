"""Shared data types: seeded RNG streams, per-arm datasets, support sets.

Design matrices are plain 2-D float64 numpy arrays throughout the package;
``as_design`` is the validating constructor. Randomness is organized as named
substreams derived from a single master seed, so that any (scenario,
repetition, role) triple maps to the same generator on every platform and
every run.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np


class StructuralError(ValueError):
    """A data structure violates one of its invariants."""


class ConfigError(ValueError):
    """A configuration value is missing, malformed, or out of range."""


def as_design(data, *, name: str = "design matrix") -> np.ndarray:
    """Validate and return a 2-D float64 design matrix.

    Accepts anything array-like; rejects non-2-D shapes and non-finite
    entries. Always returns float64 (copying only when needed).
    """
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2:
        raise StructuralError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise StructuralError(f"{name} contains non-finite entries")
    return arr


def _label_key(label: str) -> int:
    # Stable 64-bit key for a string label, independent of PYTHONHASHSEED.
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class RngStream:
    """A named, reproducible random substream.

    The same (seed, scenario, repetition, role) always yields an identical
    generator; distinct identifiers yield statistically independent ones.
    """

    seed: int
    scenario: str
    repetition: int
    role: str

    def __post_init__(self) -> None:
        if not (0 <= int(self.seed) < 2**64):
            raise StructuralError(f"master seed out of uint64 range: {self.seed}")
        if self.repetition < 0:
            raise StructuralError(f"repetition must be >= 0, got {self.repetition}")
        if not self.scenario or not self.role:
            raise StructuralError("scenario and role labels must be nonempty")

    def seed_sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(
            (int(self.seed), _label_key(self.scenario), int(self.repetition), _label_key(self.role))
        )

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.seed_sequence()))

    def sub_seed(self) -> int:
        """A stable uint64 identifier for this substream (logged in traces)."""
        return int(self.seed_sequence().generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class SupportSet:
    """A sorted, duplicate-free set of coordinate indices inside [0, ambient_dim)."""

    indices: np.ndarray
    ambient_dim: int

    def __post_init__(self) -> None:
        idx = np.asarray(self.indices, dtype=np.intp)
        if idx.ndim != 1:
            raise StructuralError("support indices must be a 1-D sequence")
        if self.ambient_dim <= 0:
            raise StructuralError(f"ambient_dim must be positive, got {self.ambient_dim}")
        if idx.size:
            if idx.min() < 0 or idx.max() >= self.ambient_dim:
                raise StructuralError("support index out of range")
            if np.any(np.diff(idx) <= 0):
                raise StructuralError("support indices must be strictly increasing")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def from_iterable(cls, indices, ambient_dim: int) -> "SupportSet":
        idx = np.unique(np.asarray(list(indices), dtype=np.intp))
        return cls(idx, ambient_dim)

    @classmethod
    def full(cls, ambient_dim: int) -> "SupportSet":
        return cls(np.arange(ambient_dim, dtype=np.intp), ambient_dim)

    @property
    def size(self) -> int:
        return int(self.indices.size)

    def is_full(self) -> bool:
        return self.size == self.ambient_dim


@dataclass(frozen=True)
class ArmDataset:
    """Observations collected for one arm, split into two equal halves.

    Rows 0..split_point-1 form the preparation half (support selection);
    rows split_point..2*split_point-1 form the estimation half (initial
    estimator and the transformed design).
    """

    arm_id: int
    contexts: np.ndarray
    rewards: np.ndarray
    split_point: int

    def __post_init__(self) -> None:
        X = as_design(self.contexts, name="arm contexts")
        y = np.asarray(self.rewards, dtype=np.float64)
        if y.ndim != 1:
            raise StructuralError("rewards must be 1-D")
        if not np.all(np.isfinite(y)):
            raise StructuralError("rewards contain non-finite entries")
        if self.split_point < 1:
            raise StructuralError(f"split_point must be >= 1, got {self.split_point}")
        if X.shape[0] != 2 * self.split_point or y.shape[0] != 2 * self.split_point:
            raise StructuralError(
                "dataset must hold exactly 2*split_point rows: "
                f"contexts {X.shape[0]}, rewards {y.shape[0]}, split_point {self.split_point}"
            )
        object.__setattr__(self, "contexts", X)
        object.__setattr__(self, "rewards", y)

    @property
    def dim(self) -> int:
        return int(self.contexts.shape[1])


def split_halves(dataset: ArmDataset):
    """Return ((X_prep, y_prep), (X_est, y_est)) views of the two halves."""
    n = dataset.split_point
    if dataset.contexts.shape[0] != 2 * n or dataset.rewards.shape[0] != 2 * n:
        raise StructuralError("dataset halves are malformed")
    X, y = dataset.contexts, dataset.rewards
    return (X[:n], y[:n]), (X[n:], y[n:])


def truncate_columns(X: np.ndarray, support: SupportSet) -> np.ndarray:
    """Keep only the support's columns of X (returns a new contiguous array)."""
    X = as_design(X)
    if X.shape[1] != support.ambient_dim:
        raise StructuralError(
            f"support ambient dim {support.ambient_dim} does not match design width {X.shape[1]}"
        )
    return np.ascontiguousarray(X[:, support.indices])
