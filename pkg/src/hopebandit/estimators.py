"""Linear estimators used by the bandit policies.

Two regression routines, both written for the overparameterized regime
(possibly many more columns than rows):

* ``fit_lasso``: cyclic coordinate descent on the l1-penalized least squares
  objective, with the Gram matrix precomputed once and warm starts down a
  geometric regularization path.
* ``fit_rdl``: the ridgeless (minimum-l2-norm) interpolator, computed from an
  eigendecomposition of the smaller Gram matrix with a relative eigenvalue
  cutoff, so rank-deficient designs fall back to the pseudo-inverse solution.

Plus two support-selection helpers: ``lasso_support`` (nonzeros of a lasso
fit) and ``sis_screen`` (top marginal correlations).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import StructuralError, SupportSet, as_design

RDL_EIG_CUTOFF = 1e-10

_OBJECTIVE_SCALES = ("unit", "inverse-n")


@dataclass(frozen=True)
class LassoConfig:
    """Settings for ``fit_lasso``.

    lam: penalty weight, must be >= 0.
    objective_scale: "unit" minimizes ||y - X theta||^2 + lam * ||theta||_1;
        "inverse-n" minimizes (1/N) ||y - X theta||^2 + lam * ||theta||_1.
    max_iters: coordinate-descent sweep budget per path point.
    tol: convergence threshold on the largest coefficient change in a sweep.
    """

    lam: float
    objective_scale: str = "inverse-n"
    max_iters: int = 50000
    tol: float = 1e-6

    def __post_init__(self) -> None:
        if self.lam < 0 or not math.isfinite(self.lam):
            raise StructuralError(f"lasso lam must be finite and >= 0, got {self.lam}")
        if self.objective_scale not in _OBJECTIVE_SCALES:
            raise StructuralError(
                f"objective_scale must be one of {_OBJECTIVE_SCALES}, got {self.objective_scale!r}"
            )
        if self.max_iters < 1:
            raise StructuralError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.tol <= 0:
            raise StructuralError(f"tol must be positive, got {self.tol}")


@dataclass(frozen=True)
class Coefficients:
    """A fitted coefficient vector plus solver diagnostics."""

    values: np.ndarray
    converged: bool = True
    n_iter: int = 0

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 1:
            raise StructuralError("coefficient values must be 1-D")
        object.__setattr__(self, "values", vals)


def initial_lambda(sigma: float, p: int, n: int, const: float = 1.0) -> float:
    """Default penalty for p-dimensional fits: const * sigma * sqrt(log(p) / n)."""
    if p < 2 or n < 1:
        raise StructuralError(f"initial_lambda needs p >= 2 and n >= 1, got p={p}, n={n}")
    return const * sigma * math.sqrt(math.log(p) / n)


def _soft(c: float, thr: float) -> float:
    if c > thr:
        return c - thr
    if c < -thr:
        return c + thr
    return 0.0


def _cd_sweep(G: np.ndarray, g: np.ndarray, beta: np.ndarray, diag: np.ndarray,
              thr: float, order: np.ndarray) -> float:
    """One pass of cyclic coordinate minimization.

    g is maintained as X^T y - G beta; returns the largest coefficient change.
    """
    max_delta = 0.0
    for j in order:
        d_jj = diag[j]
        if d_jj <= 0.0:
            # zero-variance column: coefficient pinned at 0
            if beta[j] != 0.0:
                g += G[j] * beta[j]
                beta[j] = 0.0
            continue
        b_old = beta[j]
        c = g[j] + d_jj * b_old
        b_new = _soft(c, thr) / d_jj
        if b_new != b_old:
            delta = b_new - b_old
            g -= G[j] * delta
            beta[j] = b_new
            change = abs(delta)
            if change > max_delta:
                max_delta = change
    return max_delta


def _cd_solve(G: np.ndarray, q: np.ndarray, thr: float, beta: np.ndarray,
              max_iters: int, tol: float) -> tuple[bool, int]:
    """Coordinate descent at one threshold, active-set accelerated, in place."""
    p = q.shape[0]
    diag = np.ascontiguousarray(np.diag(G))
    g = q - G @ beta
    all_coords = np.arange(p)
    iters = 0
    while iters < max_iters:
        delta = _cd_sweep(G, g, beta, diag, thr, all_coords)
        iters += 1
        if delta <= tol:
            return True, iters
        # iterate on the current active set until it stabilizes, then re-check
        active = np.flatnonzero(beta)
        while active.size and iters < max_iters:
            delta = _cd_sweep(G, g, beta, diag, thr, active)
            iters += 1
            if delta <= tol:
                break
    # one final full sweep decides convergence when the budget ran out
    return False, iters


def fit_lasso(X, y, config: LassoConfig, *, warm_start: np.ndarray | None = None) -> Coefficients:
    """L1-penalized least squares by cyclic coordinate descent.

    Uses the precomputed Gram matrix (X^T X) so each coordinate update is a
    single vector operation, and warm-starts down a short geometric path from
    the smallest penalty that zeroes everything. Zero-variance columns get a
    zero coefficient. If the sweep budget runs out the best iterate is
    returned with ``converged=False`` and a warning, not an error.
    """
    X = as_design(X)
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    if y.shape != (n,):
        raise StructuralError(f"rewards shape {y.shape} does not match {n} rows")

    scale = 1.0 if config.objective_scale == "unit" else 1.0 / n
    thr_target = config.lam / (2.0 * scale)

    G = X.T @ X
    q = X.T @ y

    beta = np.zeros(p) if warm_start is None else np.array(warm_start, dtype=np.float64)
    if beta.shape != (p,):
        raise StructuralError("warm_start shape does not match design width")

    thr_max = float(np.max(np.abs(q))) if p else 0.0
    if thr_target >= thr_max:
        return Coefficients(np.zeros(p), converged=True, n_iter=0)

    if warm_start is None and thr_target > 0 and thr_target < 0.5 * thr_max:
        n_steps = 4
        ratio = (thr_target / thr_max) ** (1.0 / n_steps)
        path = [thr_max * ratio ** k for k in range(1, n_steps)]
    else:
        path = []

    total = 0
    for thr in path:
        _, used = _cd_solve(G, q, thr, beta, config.max_iters, config.tol)
        total += used
    converged, used = _cd_solve(G, q, thr_target, beta, config.max_iters, config.tol)
    total += used
    if not converged:
        warnings.warn(
            f"lasso coordinate descent hit max_iters={config.max_iters} before tol={config.tol}",
            RuntimeWarning,
            stacklevel=2,
        )
    return Coefficients(beta, converged=converged, n_iter=total)


def fit_rdl(X, y) -> Coefficients:
    """Minimum-norm interpolator theta = X^T (X X^T)^+ y.

    Computed through an eigendecomposition of the smaller of the two Gram
    matrices; eigenvalues below RDL_EIG_CUTOFF relative to the largest are
    dropped, which makes rank-deficient designs resolve to the pseudo-inverse
    (minimum-norm least squares) solution instead of failing.
    """
    X = as_design(X)
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    if y.shape != (n,):
        raise StructuralError(f"rewards shape {y.shape} does not match {n} rows")

    if n <= p:
        G = X @ X.T
        w, U = np.linalg.eigh(G)
        keep = w > RDL_EIG_CUTOFF * max(w[-1], 0.0)
        if not np.any(keep):
            return Coefficients(np.zeros(p))
        Uk = U[:, keep]
        coeffs = Uk @ ((Uk.T @ y) / w[keep])
        theta = X.T @ coeffs
    else:
        G = X.T @ X
        w, U = np.linalg.eigh(G)
        keep = w > RDL_EIG_CUTOFF * max(w[-1], 0.0)
        if not np.any(keep):
            return Coefficients(np.zeros(p))
        Uk = U[:, keep]
        q = X.T @ y
        theta = Uk @ ((Uk.T @ q) / w[keep])
    return Coefficients(theta)


def lasso_support(X, y, config: LassoConfig, zero_tol: float = 1e-8) -> SupportSet:
    """Coordinates whose lasso coefficient magnitude exceeds zero_tol."""
    if zero_tol < 0:
        raise StructuralError(f"zero_tol must be >= 0, got {zero_tol}")
    fit = fit_lasso(X, y, config)
    idx = np.flatnonzero(np.abs(fit.values) > zero_tol)
    return SupportSet(idx.astype(np.intp), int(np.asarray(X).shape[1]))


def sis_screen(X, y, keep: int | None = None) -> SupportSet:
    """Sure-independence screening: keep the top-|keep| marginal correlations.

    The score for coordinate k is |(1/N) sum_t X[t, k] y[t]|. The default
    budget is ceil(N / log N); ties resolve toward the lower index. keep is
    clamped to [1, p].
    """
    X = as_design(X)
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    if y.shape != (n,):
        raise StructuralError(f"rewards shape {y.shape} does not match {n} rows")
    if keep is None:
        keep = math.ceil(n / math.log(n)) if n >= 2 else 1
    if keep < 1:
        raise StructuralError(f"keep must be >= 1, got {keep}")
    keep = min(keep, p)
    scores = np.abs(X.T @ y) / n
    # stable sort on negated scores keeps lower indices first among ties
    order = np.argsort(-scores, kind="stable")[:keep]
    return SupportSet(np.sort(order).astype(np.intp), p)
