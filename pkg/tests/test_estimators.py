"""Estimator oracles: soft-thresholding, interpolation, minimum norm, screening."""

import numpy as np
import pytest

from hopebandit.core import StructuralError
from hopebandit.estimators import (
    LassoConfig,
    fit_lasso,
    fit_rdl,
    initial_lambda,
    lasso_support,
    sis_screen,
)


def orthonormal_design(rng, n, p):
    q, _ = np.linalg.qr(rng.standard_normal((n, p)))
    return q


class TestFitLasso:
    def test_identity_design_oracle(self):
        """X = I2, y = (3, 0.5), unit scale, lam = 1 soft-thresholds at 0.5."""
        fit = fit_lasso(np.eye(2), np.array([3.0, 0.5]), LassoConfig(lam=1.0, objective_scale="unit"))
        np.testing.assert_allclose(fit.values, [2.5, 0.0], atol=1e-12)
        assert fit.converged

    def test_orthonormal_design_soft_thresholds_ols(self):
        """On orthonormal designs the unit-scale solution is S(X^T y, lam/2)."""
        for seed in range(20):
            rng = np.random.default_rng(seed)
            n = int(rng.integers(5, 40))
            p = int(rng.integers(2, n + 1))
            X = orthonormal_design(rng, n, p)
            y = rng.standard_normal(n)
            lam = float(rng.uniform(0.05, 2.0))
            fit = fit_lasso(X, y, LassoConfig(lam=lam, objective_scale="unit"))
            q = X.T @ y
            expected = np.sign(q) * np.maximum(np.abs(q) - lam / 2.0, 0.0)
            np.testing.assert_allclose(fit.values, expected, atol=1e-8)

    def test_inverse_n_matches_rescaled_unit_objective(self):
        """(1/N)||.||^2 + lam|.| and ||.||^2 + N*lam|.| share their minimizer."""
        rng = np.random.default_rng(3)
        X = rng.standard_normal((30, 10))
        y = rng.standard_normal(30)
        a = fit_lasso(X, y, LassoConfig(lam=0.2, objective_scale="inverse-n"))
        b = fit_lasso(X, y, LassoConfig(lam=0.2 * 30, objective_scale="unit"))
        np.testing.assert_allclose(a.values, b.values, atol=1e-9)

    def test_zero_penalty_recovers_least_squares(self):
        rng = np.random.default_rng(4)
        X = rng.standard_normal((50, 8))
        y = rng.standard_normal(50)
        fit = fit_lasso(X, y, LassoConfig(lam=0.0, objective_scale="unit", max_iters=5000))
        expected, *_ = np.linalg.lstsq(X, y, rcond=None)
        np.testing.assert_allclose(fit.values, expected, atol=1e-7)

    def test_full_shrinkage_above_lambda_max(self):
        """lam >= 2 ||X^T y||_inf (unit scale) forces the zero solution."""
        rng = np.random.default_rng(5)
        X = rng.standard_normal((20, 15))
        y = rng.standard_normal(20)
        lam = 2.0 * float(np.max(np.abs(X.T @ y))) * 1.0001
        fit = fit_lasso(X, y, LassoConfig(lam=lam, objective_scale="unit"))
        np.testing.assert_array_equal(fit.values, np.zeros(15))

    def test_l1_norm_monotone_in_lambda(self):
        """||theta(lam)||_1 must not increase along an increasing lam grid."""
        for seed in range(10):
            rng = np.random.default_rng(100 + seed)
            X = rng.standard_normal((25, 60))
            y = rng.standard_normal(25)
            norms = []
            for lam in np.geomspace(0.01, 5.0, 6):
                fit = fit_lasso(X, y, LassoConfig(lam=float(lam), objective_scale="inverse-n"))
                norms.append(np.abs(fit.values).sum())
            diffs = np.diff(norms)
            assert np.all(diffs <= 1e-8), norms

    def test_zero_variance_column_gets_zero_coefficient(self):
        rng = np.random.default_rng(6)
        X = rng.standard_normal((30, 5))
        X[:, 2] = 0.0
        y = rng.standard_normal(30)
        fit = fit_lasso(X, y, LassoConfig(lam=0.05))
        assert fit.values[2] == 0.0

    def test_exhausted_budget_warns_and_flags(self):
        rng = np.random.default_rng(7)
        base = rng.standard_normal(40)
        X = np.stack([base + 0.001 * rng.standard_normal(40) for _ in range(6)], axis=1)
        y = rng.standard_normal(40)
        with pytest.warns(RuntimeWarning):
            fit = fit_lasso(X, y, LassoConfig(lam=1e-8, objective_scale="unit", max_iters=1))
        assert not fit.converged

    def test_rejects_negative_lambda_and_bad_scale(self):
        with pytest.raises(StructuralError):
            LassoConfig(lam=-0.1)
        with pytest.raises(StructuralError):
            LassoConfig(lam=0.1, objective_scale="squared")


class TestFitRdl:
    def test_pinned_example(self):
        """X = [[1, 1, 0]], y = [2]: the min-norm interpolant is (1, 1, 0)."""
        fit = fit_rdl(np.array([[1.0, 1.0, 0.0]]), np.array([2.0]))
        np.testing.assert_allclose(fit.values, [1.0, 1.0, 0.0], atol=1e-12)

    def test_interpolates_wide_designs(self):
        for seed in range(20):
            rng = np.random.default_rng(seed)
            n = int(rng.integers(3, 25))
            p = int(rng.integers(n + 1, 80))
            X = rng.standard_normal((n, p))
            y = rng.standard_normal(n)
            theta = fit_rdl(X, y).values
            np.testing.assert_allclose(X @ theta, y, atol=1e-8 * max(1.0, np.linalg.norm(y)))

    def test_minimum_norm_among_interpolants(self):
        """Adding any null-space perturbation must not shrink the l2 norm."""
        for seed in range(10):
            rng = np.random.default_rng(200 + seed)
            n, p = 8, 30
            X = rng.standard_normal((n, p))
            y = rng.standard_normal(n)
            theta = fit_rdl(X, y).values
            pinv = np.linalg.pinv(X)
            for _ in range(10):
                v = rng.standard_normal(p)
                v_null = v - pinv @ (X @ v)
                perturbed = theta + v_null
                np.testing.assert_allclose(X @ perturbed, y, atol=1e-7)
                assert np.linalg.norm(perturbed) >= np.linalg.norm(theta) - 1e-10

    def test_tall_designs_match_least_squares(self):
        rng = np.random.default_rng(8)
        X = rng.standard_normal((60, 10))
        y = rng.standard_normal(60)
        expected, *_ = np.linalg.lstsq(X, y, rcond=None)
        np.testing.assert_allclose(fit_rdl(X, y).values, expected, atol=1e-9)

    def test_rank_deficient_design_matches_pinv(self):
        rng = np.random.default_rng(9)
        X = rng.standard_normal((6, 20))
        X[3] = X[1]
        y = rng.standard_normal(6)
        y[3] = y[1]
        np.testing.assert_allclose(fit_rdl(X, y).values, np.linalg.pinv(X) @ y, atol=1e-8)

    def test_zero_design_returns_zero(self):
        fit = fit_rdl(np.zeros((4, 7)), np.ones(4))
        np.testing.assert_array_equal(fit.values, np.zeros(7))


class TestLassoSupport:
    def test_recovers_planted_support(self):
        rng = np.random.default_rng(10)
        n, p, s0 = 100, 40, 5
        X = rng.standard_normal((n, p))
        true_idx = np.sort(rng.choice(p, size=s0, replace=False))
        theta = np.zeros(p)
        theta[true_idx] = rng.uniform(2.0, 4.0, s0) * rng.choice([-1.0, 1.0], s0)
        y = X @ theta + 0.1 * rng.standard_normal(n)
        support = lasso_support(X, y, LassoConfig(lam=0.2))
        np.testing.assert_array_equal(support.indices, true_idx)

    def test_huge_penalty_gives_empty_support(self):
        rng = np.random.default_rng(11)
        X = rng.standard_normal((20, 10))
        y = rng.standard_normal(20)
        support = lasso_support(X, y, LassoConfig(lam=1e6))
        assert support.size == 0


class TestSisScreen:
    def test_default_budget_is_ceil_n_over_log_n(self):
        rng = np.random.default_rng(12)
        X = rng.standard_normal((44, 200))
        y = rng.standard_normal(44)
        support = sis_screen(X, y)
        assert support.size == int(np.ceil(44 / np.log(44)))

    def test_ranks_by_marginal_correlation(self):
        """Columns with the largest |X^T y| / N must be the ones kept."""
        rng = np.random.default_rng(13)
        n, p = 50, 12
        X = rng.standard_normal((n, p))
        y = rng.standard_normal(n)
        support = sis_screen(X, y, keep=4)
        scores = np.abs(X.T @ y) / n
        expected = np.sort(np.argsort(-scores, kind="stable")[:4])
        np.testing.assert_array_equal(support.indices, expected)

    def test_tie_breaks_toward_lower_index(self):
        X = np.zeros((4, 3))
        X[:, 1] = [1.0, 0.0, 0.0, 0.0]
        X[:, 2] = [1.0, 0.0, 0.0, 0.0]
        y = np.array([1.0, 0.0, 0.0, 0.0])
        support = sis_screen(X, y, keep=1)
        np.testing.assert_array_equal(support.indices, [1])

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(14)
        X = rng.standard_normal((30, 20))
        y = rng.standard_normal(30)
        perm = rng.permutation(20)
        base = set(sis_screen(X, y, keep=6).indices.tolist())
        permuted = sis_screen(X[:, perm], y, keep=6).indices
        assert {int(perm[j]) for j in permuted} == base

    def test_keep_clamps_to_dimension(self):
        rng = np.random.default_rng(15)
        X = rng.standard_normal((40, 3))
        y = rng.standard_normal(40)
        assert sis_screen(X, y, keep=99).size == 3


class TestInitialLambda:
    def test_frozen_values(self):
        sigma = np.sqrt(0.1)
        np.testing.assert_allclose(initial_lambda(sigma, 200, 44), 0.10973436279724899, rtol=1e-12)
        np.testing.assert_allclose(initial_lambda(sigma, 200, 22), 0.15518782412623913, rtol=1e-12)

    def test_scales_linearly_in_sigma_and_const(self):
        assert initial_lambda(2.0, 100, 25) == 2.0 * initial_lambda(1.0, 100, 25)
        assert initial_lambda(1.0, 100, 25, const=3.0) == 3.0 * initial_lambda(1.0, 100, 25)
