"""Pointwise reward estimation for a single query direction.

Given an arm's dataset and a query context x, the estimator rewrites the
regression along x: with N estimation rows X and initial estimate theta-hat,

    X theta = sqrt(N) * alpha * z + sqrt(N) * zeta,

where z = Xx / ||Xx||, alpha carries the component of theta along x, and
zeta = X (I - x x^T / ||x||^2) theta / sqrt(N) is the nuisance part. The
nuisance is compressed through an orthonormal basis Gamma built from the
eigenvectors of X Q X^T / N (Q the projector away from x), with the column
most aligned with z swapped for the normalized direction X Q theta-hat. The
coefficient vector of y on sqrt(N) [z | Gamma] is then estimated by lasso,
and only the z-coordinate (alpha-hat) is kept: the reward estimate is
alpha-hat rescaled back to the query, mu-hat = alpha-hat * sqrt(N) ||x||^2
/ ||Xx||.

When theta-hat equals the true theta, Gamma maps the nuisance to a 1-sparse
vector, which is what makes the lasso step effective even with N far below
the ambient dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import ArmDataset, StructuralError, SupportSet, as_design, split_halves, truncate_columns
from .estimators import (
    Coefficients,
    LassoConfig,
    fit_lasso,
    fit_rdl,
    initial_lambda,
    lasso_support,
    sis_screen,
)

LAMBDA_FLOOR = 1e-12

# Relative eigenvalue threshold below which a direction of X Q X^T counts
# as null. Null directions get a canonical basis and are never sacrificed
# for the nuisance column.
EIG_NULL_CUTOFF = 1e-10

_INITIAL_ESTIMATORS = ("lasso", "rdl", "cross-validated")
_SUPPORT_RULES = ("lasso-support", "sis", "full")


@dataclass(frozen=True)
class PweConfig:
    """Settings for the pointwise estimator.

    initial_estimator: how theta-hat is fit on the estimation half. With
        "cross-validated", each dataset picks lasso or rdl by held-out error
        on the preparation half; a pick of rdl also switches the effective
        support rule to "full" for that dataset (the ridgeless route targets
        dense coefficient vectors, where a lasso support would discard most
        of the signal).
    support_rule: how the coordinate support is selected on the preparation
        half ("lasso-support", "sis", or "full"). An empty selection falls
        back to the full coordinate set.
    lambda_rule: optional override (n, sigma) -> penalty for the transformed
        lasso solve. The default is lambda_const * sigma * sqrt(log(n) / n),
        floored at LAMBDA_FLOOR so the solve stays strictly penalized even
        at sigma = 0.
    initial_lambda_const: multiplier on the sigma * sqrt(log(p) / n) penalty
        used wherever the initial estimator or the support stage fits a
        lasso on raw coordinates.
    gamma_sigma_tol: relative smallest-singular-value threshold under which
        the column-swapped basis counts as singular and the plain eigenvector
        basis is used instead.
    """

    initial_estimator: str = "cross-validated"
    support_rule: str = "lasso-support"
    lambda_rule: Callable[[int, float], float] | None = None
    lambda_const: float = 0.5
    initial_lambda_const: float = 1.0
    gamma_sigma_tol: float = 1e-10
    lasso_max_iters: int = 200000
    lasso_tol: float = 1e-8

    def __post_init__(self) -> None:
        if self.initial_estimator not in _INITIAL_ESTIMATORS:
            raise StructuralError(
                f"initial_estimator must be one of {_INITIAL_ESTIMATORS}, got {self.initial_estimator!r}"
            )
        if self.support_rule not in _SUPPORT_RULES:
            raise StructuralError(
                f"support_rule must be one of {_SUPPORT_RULES}, got {self.support_rule!r}"
            )
        if self.lambda_const <= 0:
            raise StructuralError(f"lambda_const must be positive, got {self.lambda_const}")
        if self.initial_lambda_const <= 0:
            raise StructuralError(
                f"initial_lambda_const must be positive, got {self.initial_lambda_const}"
            )
        if self.gamma_sigma_tol <= 0:
            raise StructuralError(f"gamma_sigma_tol must be positive, got {self.gamma_sigma_tol}")


@dataclass(frozen=True)
class PweWorkspace:
    """The deterministic pieces of one transformed problem."""

    scale: float
    z: np.ndarray
    q_theta_hat: np.ndarray
    gamma: np.ndarray
    replaced_index: int | None
    z_design: np.ndarray


def transformed_lambda(config: PweConfig, n: int, sigma: float) -> float:
    """Penalty for the transformed solve at estimation-half size n."""
    if n < 1:
        raise StructuralError(f"estimation half must be nonempty, got n={n}")
    if config.lambda_rule is not None:
        lam = float(config.lambda_rule(n, sigma))
        if lam <= 0:
            raise StructuralError(f"lambda_rule produced a non-positive penalty: {lam}")
        return lam
    return max(config.lambda_const * sigma * math.sqrt(math.log(n) / n) if n > 1 else 0.0,
               LAMBDA_FLOOR)


def project_split(X, x, theta):
    """Split X theta into its component along the query and the nuisance.

    Returns (alpha, z, zeta) with X theta = sqrt(N) alpha z + sqrt(N) zeta,
    z unit-norm. Requires x != 0 and Xx != 0.
    """
    X = as_design(X)
    x = np.asarray(x, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    n = X.shape[0]
    if x.shape != (X.shape[1],) or theta.shape != (X.shape[1],):
        raise StructuralError("query and theta must match the design width")
    nx2 = float(x @ x)
    if nx2 == 0.0:
        raise StructuralError("query vector is zero")
    v = X @ x
    nv = float(np.linalg.norm(v))
    if nv == 0.0:
        raise StructuralError("X x is zero; the query direction is invisible to the design")
    sqrt_n = math.sqrt(n)
    alpha = (nv / (sqrt_n * nx2)) * float(x @ theta)
    z = v / nv
    zeta = (X @ theta - v * (float(x @ theta) / nx2)) / sqrt_n
    return alpha, z, zeta


def _fix_signs(U: np.ndarray) -> np.ndarray:
    """Make each column's first nonnegligible component positive."""
    mags = np.abs(U)
    lead = (mags > 1e-12).argmax(axis=0)
    signs = np.sign(U[lead, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return np.ascontiguousarray(U * signs)


def _eigh_descending(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric eigendecomposition, eigenvalues descending, canonical signs."""
    w, U = np.linalg.eigh(A)
    return w[::-1].copy(), _fix_signs(U[:, ::-1])


def _canonicalize_null_cluster(w: np.ndarray, U: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Replace the zero-eigenvalue block of U with a canonical basis.

    When X Q X^T is rank deficient its null eigenspace has no preferred
    basis, and the one the eigensolver returns rotates discontinuously under
    tiny input perturbations. Within that block we pin the first vector to
    the projection of z and complete with projections of coordinate vectors,
    which depend only on the subspace itself. Untouched when the null space
    is at most one-dimensional.
    """
    cluster = w <= EIG_NULL_CUTOFF * max(float(w[0]), 0.0)
    d = int(cluster.sum())
    if d < 2:
        return U
    basis_c = U[:, cluster]
    cols: list[np.ndarray] = []
    pz = basis_c @ (basis_c.T @ z)
    npz = float(np.linalg.norm(pz))
    if npz > 1e-8:
        cols.append(pz / npz)
    for j in range(U.shape[0]):
        if len(cols) == d:
            break
        v = basis_c @ basis_c[j]
        for q in cols:
            v = v - q * float(q @ v)
        nv = float(np.linalg.norm(v))
        if nv > 1e-8:
            cols.append(v / nv)
    if len(cols) < d:
        return U
    out = U.copy()
    out[:, cluster] = np.stack(cols, axis=1)
    return _fix_signs(out)


def build_gamma(X, x, theta_hat, *, sigma_tol: float = 1e-10):
    """Sparsifying basis for the nuisance of the transformed problem.

    Columns are the eigenvectors of X Q X^T / N in descending eigenvalue
    order (Q projects away from the query). Among the columns with
    nonnegligible eigenvalue, the one most aligned with z is replaced by
    the normalized X Q theta-hat, which is the direction the true nuisance
    concentrates on when theta-hat is accurate; null columns are excluded
    because the nuisance is orthogonal to all of them, so swapping one
    would make the basis singular. Returns (gamma, replaced_index);
    replaced_index is None when the swap is skipped (X Q theta-hat
    numerically zero, all eigenvalues null, or the swapped matrix singular
    at sigma_tol).
    """
    X = as_design(X)
    x = np.asarray(x, dtype=np.float64)
    theta_hat = np.asarray(theta_hat, dtype=np.float64)
    n = X.shape[0]
    nx2 = float(x @ x)
    if nx2 == 0.0:
        raise StructuralError("query vector is zero")
    v = X @ x
    nv = float(np.linalg.norm(v))
    if nv == 0.0:
        raise StructuralError("X x is zero; cannot orient the basis")
    z = v / nv
    w_vec = X @ theta_hat
    u = w_vec - v * (float(x @ theta_hat) / nx2)
    A = (X @ X.T - np.outer(v, v) / nx2) / n
    return _finish_gamma(A, z, u, float(np.linalg.norm(w_vec)), sigma_tol)


def _finish_gamma(A: np.ndarray, z: np.ndarray, u: np.ndarray, w_norm: float,
                  sigma_tol: float) -> tuple[np.ndarray, int | None]:
    w, basis = _eigh_descending(A)
    basis = _canonicalize_null_cluster(w, basis, z)
    u_norm = float(np.linalg.norm(u))
    if u_norm <= 1e-12 * (1.0 + w_norm):
        return basis, None
    # The nuisance direction lies in the span of the nonnull eigenvectors
    # (it is orthogonal to every null direction of X Q X^T by construction),
    # so only those columns may be sacrificed without losing invertibility.
    nonnull = w > EIG_NULL_CUTOFF * max(float(w[0]), 0.0)
    if not bool(nonnull.any()):
        return basis, None
    align = np.where(nonnull, np.abs(basis.T @ z), -1.0)
    i0 = int(np.argmax(align))
    gamma = basis.copy()
    gamma[:, i0] = u / u_norm
    svals = np.linalg.svd(gamma, compute_uv=False)
    if svals[-1] <= sigma_tol * svals[0]:
        return basis, None
    return gamma, i0


def solve_transformed(z_design, y, lam: float, *, max_iters: int = 20000,
                      tol: float = 1e-8) -> Coefficients:
    """Lasso on the transformed design: (1/N) ||y - Z beta||^2 + lam ||beta||_1.

    Coordinate 0 of the solution is alpha-hat; the rest is the compressed
    nuisance. lam must be strictly positive.
    """
    if lam <= 0:
        raise StructuralError(f"transformed solve requires lam > 0, got {lam}")
    config = LassoConfig(lam=lam, objective_scale="inverse-n", max_iters=max_iters, tol=tol)
    return fit_lasso(z_design, y, config)


def predict_mu(alpha_hat: float, workspace: PweWorkspace) -> float:
    """Map the transformed coefficient back to the reward scale."""
    return float(alpha_hat) * workspace.scale


def build_workspace(X, x, theta_hat, *, gamma_sigma_tol: float = 1e-10) -> PweWorkspace:
    """Assemble the full transformed problem for one query."""
    X = as_design(X)
    x = np.asarray(x, dtype=np.float64)
    theta_hat = np.asarray(theta_hat, dtype=np.float64)
    n = X.shape[0]
    nx2 = float(x @ x)
    if nx2 == 0.0:
        raise StructuralError("query vector is zero")
    v = X @ x
    nv = float(np.linalg.norm(v))
    if nv == 0.0:
        raise StructuralError("X x is zero; cannot build the transformed design")
    z = v / nv
    w_vec = X @ theta_hat
    u = w_vec - v * (float(x @ theta_hat) / nx2)
    A = (X @ X.T - np.outer(v, v) / nx2) / n
    gamma, replaced = _finish_gamma(A, z, u, float(np.linalg.norm(w_vec)), gamma_sigma_tol)
    sqrt_n = math.sqrt(n)
    z_design = sqrt_n * np.concatenate([z[:, None], gamma], axis=1)
    scale = sqrt_n * nx2 / nv
    return PweWorkspace(
        scale=scale,
        z=z,
        q_theta_hat=u / sqrt_n,
        gamma=gamma,
        replaced_index=replaced,
        z_design=z_design,
    )


def cross_validate_initial(X, y, sigma: float, *, n_folds: int = 5,
                           lambda_const: float = 1.0) -> str:
    """Pick "lasso" or "rdl" by held-out squared error on (X, y).

    Contiguous deterministic folds; ties and datasets with fewer than 10
    rows resolve to "lasso". Fold fits run at a loose tolerance: the SSE
    gap between the two estimators is macroscopic when it matters, so the
    last digits of the fold coefficients cannot flip the choice.
    """
    X = as_design(X)
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    if y.shape != (n,):
        raise StructuralError(f"rewards shape {y.shape} does not match {n} rows")
    if n < 10:
        return "lasso"
    folds = np.array_split(np.arange(n), n_folds)
    sse_lasso = 0.0
    sse_rdl = 0.0
    for val_idx in folds:
        mask = np.ones(n, dtype=bool)
        mask[val_idx] = False
        X_tr, y_tr = X[mask], y[mask]
        X_val, y_val = X[val_idx], y[val_idx]
        lam = initial_lambda(sigma, p, X_tr.shape[0], const=lambda_const) if p >= 2 else 0.0
        lam = max(lam, LAMBDA_FLOOR)
        theta_l = fit_lasso(X_tr, y_tr, LassoConfig(lam=lam, max_iters=10000, tol=1e-5)).values
        theta_r = fit_rdl(X_tr, y_tr).values
        sse_lasso += float(np.sum((X_val @ theta_l - y_val) ** 2))
        sse_rdl += float(np.sum((X_val @ theta_r - y_val) ** 2))
    return "rdl" if sse_rdl < sse_lasso else "lasso"


@dataclass(frozen=True)
class ArmPrep:
    """Per-dataset work that is independent of the query.

    Caches the selected support, the (truncated) estimation half and its
    Gram matrix, and the initial estimate, so per-round queries only pay for
    the rank-one update and the small transformed solve.
    """

    support: SupportSet
    estimator_tag: str
    theta_hat: np.ndarray
    theta_tr: np.ndarray
    x_design: np.ndarray
    y_est: np.ndarray
    gram: np.ndarray = field(repr=False)
    w: np.ndarray = field(repr=False)
    n: int = 0


def prepare_arm(dataset: ArmDataset, config: PweConfig, sigma: float, *,
                support_override: SupportSet | None = None,
                theta_override: np.ndarray | None = None) -> ArmPrep:
    """Run the query-independent stages: support selection and theta-hat.

    support_override / theta_override bypass the corresponding stage (used
    for oracle-injection tests and for replaying a frozen preparation).
    """
    (X_prep, y_prep), (X_est, y_est) = split_halves(dataset)
    p = dataset.dim
    n = dataset.split_point

    estimator_tag = config.initial_estimator
    support_rule = config.support_rule
    overridden = support_override is not None and theta_override is not None
    if estimator_tag == "cross-validated" and not overridden:
        estimator_tag = cross_validate_initial(
            X_prep, y_prep, sigma, lambda_const=config.initial_lambda_const
        )
        if estimator_tag == "rdl":
            support_rule = "full"
    if theta_override is not None:
        estimator_tag = "override"

    if support_override is not None:
        if support_override.ambient_dim != p:
            raise StructuralError("support override does not match the dataset dimension")
        support = support_override
    elif support_rule == "full":
        support = SupportSet.full(p)
    elif support_rule == "sis":
        support = sis_screen(X_prep, y_prep)
    else:
        lam = initial_lambda(sigma, p, n, const=config.initial_lambda_const) if p >= 2 else 0.0
        support = lasso_support(X_prep, y_prep, LassoConfig(lam=max(lam, LAMBDA_FLOOR)))
    if support.size == 0:
        support = SupportSet.full(p)

    if theta_override is not None:
        theta_hat = np.asarray(theta_override, dtype=np.float64)
        if theta_hat.shape != (p,):
            raise StructuralError("theta override does not match the dataset dimension")
    elif estimator_tag == "rdl":
        theta_hat = fit_rdl(X_est, y_est).values
    else:
        lam = initial_lambda(sigma, p, n, const=config.initial_lambda_const) if p >= 2 else 0.0
        theta_hat = fit_lasso(X_est, y_est, LassoConfig(lam=max(lam, LAMBDA_FLOOR))).values

    x_design = X_est if support.is_full() else truncate_columns(X_est, support)
    theta_tr = theta_hat if support.is_full() else theta_hat[support.indices]
    gram = x_design @ x_design.T
    w = x_design @ theta_tr
    return ArmPrep(
        support=support,
        estimator_tag=estimator_tag,
        theta_hat=theta_hat,
        theta_tr=theta_tr,
        x_design=x_design,
        y_est=y_est,
        gram=gram,
        w=w,
        n=n,
    )


def estimate_with_prep(prep: ArmPrep, x, config: PweConfig, sigma: float) -> float:
    """Pointwise estimate for one query given prepared per-arm state."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (prep.support.ambient_dim,):
        raise StructuralError("query does not match the dataset dimension")
    x_tr = x if prep.support.is_full() else x[prep.support.indices]
    query_norm = float(np.linalg.norm(x_tr))
    if query_norm <= 0.0:
        return 0.0
    # Work with the unit-normalized query and rescale the answer at the
    # end; the transformed problem is degree-0 in the query, so this only
    # pins the floating-point path, not the mathematics.
    x_tr = x_tr / query_norm
    nx2 = float(x_tr @ x_tr)
    v = prep.x_design @ x_tr
    nv = float(np.linalg.norm(v))
    design_scale = math.sqrt(float(np.trace(prep.gram)) * nx2)
    if nv <= 1e-14 * max(1.0, design_scale):
        return 0.0
    n = prep.n
    z = v / nv
    u = prep.w - v * (float(x_tr @ prep.theta_tr) / nx2)
    A = (prep.gram - np.outer(v, v) / nx2) / n
    gamma, _ = _finish_gamma(A, z, u, float(np.linalg.norm(prep.w)), config.gamma_sigma_tol)
    sqrt_n = math.sqrt(n)
    z_design = sqrt_n * np.concatenate([z[:, None], gamma], axis=1)
    lam = transformed_lambda(config, n, sigma)
    fit = solve_transformed(z_design, prep.y_est, lam,
                            max_iters=config.lasso_max_iters, tol=config.lasso_tol)
    alpha_hat = float(fit.values[0])
    return alpha_hat * (sqrt_n * nx2 / nv) * query_norm


def pwe_estimate(dataset: ArmDataset, x, config: PweConfig, sigma: float, *,
                 support: SupportSet | None = None,
                 theta_hat: np.ndarray | None = None) -> float:
    """Full pipeline: split, select support, fit theta-hat, transform, solve.

    Returns the estimated mean reward of the query context. Degenerate
    queries (zero after truncation, or invisible to the design) return 0.
    The keyword arguments inject a fixed support or initial estimate in
    place of the fitted ones.
    """
    prep = prepare_arm(dataset, config, sigma,
                       support_override=support, theta_override=theta_hat)
    return estimate_with_prep(prep, x, config, sigma)
