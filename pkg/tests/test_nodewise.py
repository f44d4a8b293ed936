import math

import numpy as np
import pytest

from mtlasso.errors import NumericError, UsageError
from mtlasso.nodewise import (
    NodewiseFit,
    fit_nodewise,
    nodewise_penalty,
    tau_alternatives,
)


class TestZeroSolutionRegime:
    def test_orthogonal_columns_gamma_zero(self):
        # exactly orthogonal columns: no column explains any other, so with
        # the self-tuned penalty the coefficient vector stays zero
        n, p = 8, 4
        x = np.zeros((n, p))
        for j in range(p):
            x[2 * j, j] = 2.0
            x[2 * j + 1, j] = 1.0
        fit = fit_nodewise(x, 1, variant="scaled_lasso")
        assert np.all(fit.gamma_hat == 0.0)
        assert np.array_equal(fit.z_hat, x[:, 1])
        assert fit.tau_hat == pytest.approx(np.linalg.norm(x[:, 1]) / math.sqrt(n), rel=1e-15)

    def test_plug_in_pilot_scale(self):
        rng = np.random.default_rng(20)
        x = rng.standard_normal((50, 6))
        fit = fit_nodewise(x, 2, variant="plug_in_lasso")
        pilot = np.linalg.norm(x[:, 2]) / math.sqrt(50)
        assert fit.tau_hat == pytest.approx(pilot, rel=1e-15)
        assert fit.penalty == pytest.approx(nodewise_penalty(pilot, 50, 6, 0.01), rel=1e-15)


class TestCollinearClosedForm:
    def test_two_column_soft_threshold(self):
        # p=2: regressing x_0 on x_1 is scalar lasso with closed form
        # gamma = sign(rho) (|rho| - n mu)_+ / ||x_1||^2, rho = x_1 . x_0
        rng = np.random.default_rng(21)
        n = 5
        x0 = rng.standard_normal(n)
        c = 0.8
        x1 = c * x0 + 0.05 * rng.standard_normal(n)
        x = np.column_stack([x0, x1])
        tau = 0.3
        fit = fit_nodewise(x, 0, eta=0.01, variant="plug_in_lasso", tau_init=tau)
        mu = nodewise_penalty(tau, n, 2, 0.01)
        rho = float(x1 @ x0)
        gamma_expected = np.sign(rho) * max(0.0, abs(rho) - n * mu) / float(x1 @ x1)
        assert fit.gamma_hat[1] == pytest.approx(gamma_expected, rel=1e-9)
        assert fit.gamma_hat[0] == 0.0
        z_expected = x0 - gamma_expected * x1
        assert np.allclose(fit.z_hat, z_expected, atol=1e-9)


class TestScaledLassoFixedPoint:
    def test_fixed_point_identity(self):
        rng = np.random.default_rng(22)
        x = rng.standard_normal((60, 10))
        fit = fit_nodewise(x, 3, variant="scaled_lasso")
        assert fit.tau_hat == np.linalg.norm(fit.z_hat) / math.sqrt(60)
        taus = tau_alternatives(fit, 60)
        assert taus["tau_from_norm"] == fit.tau_hat

    def test_reconstruction_identity_exact(self):
        rng = np.random.default_rng(23)
        x = rng.standard_normal((40, 8))
        fit = fit_nodewise(x, 5)
        recon = x[:, 5] - x @ fit.gamma_hat
        assert np.max(np.abs(fit.z_hat - recon)) == 0.0

    def test_kkt_sup_norm_bounded(self):
        rng = np.random.default_rng(24)
        x = rng.standard_normal((50, 12))
        for j in (0, 4, 11):
            fit = fit_nodewise(x, j)
            assert fit.kkt_sup_norm <= 50 * fit.penalty + 1e-6

    def test_gamma_zero_at_j(self):
        rng = np.random.default_rng(25)
        x = rng.standard_normal((30, 7))
        for j in range(7):
            assert fit_nodewise(x, j).gamma_hat[j] == 0.0


class TestTauAlternatives:
    def test_zero_gamma_both_equal_column_scale(self):
        n, p = 8, 4
        x = np.zeros((n, p))
        for j in range(p):
            x[2 * j, j] = 1.0
            x[2 * j + 1, j] = -1.0
        fit = fit_nodewise(x, 0, variant="scaled_lasso")
        taus = tau_alternatives(fit, n)
        expected = np.linalg.norm(x[:, 0]) / math.sqrt(n)
        assert taus["tau_from_inner"] == pytest.approx(expected, rel=1e-12)
        assert taus["tau_from_norm"] == pytest.approx(expected, rel=1e-12)

    def test_inner_recomputed_by_dot_product(self):
        rng = np.random.default_rng(26)
        x = rng.standard_normal((45, 9))
        fit = fit_nodewise(x, 2)
        taus = tau_alternatives(fit, 45)
        assert taus["tau_from_inner"] ** 2 == pytest.approx(
            float(fit.z_hat @ x[:, 2]) / 45, rel=1e-12
        )

    def test_negative_inner_product_rejected(self):
        fit = NodewiseFit(
            j=0, gamma_hat=np.zeros(2), z_hat=np.ones(3), tau_hat=1.0,
            variant="scaled_lasso", inner_product=-1.0, kkt_sup_norm=0.0,
            penalty=0.1,
        )
        with pytest.raises(NumericError):
            tau_alternatives(fit, 3)


class TestMonteCarloScale:
    def test_identity_covariance_tau_near_one(self):
        # population residual scale is (Sigma^{-1})_jj^{-1/2} = 1 under the
        # identity covariance; the average estimate must land within 5%
        rng = np.random.default_rng(27)
        n, p = 500, 50
        x = rng.standard_normal((n, p))
        taus = [fit_nodewise(x, j).tau_hat for j in range(0, p, 5)]
        assert abs(np.mean(taus) - 1.0) <= 0.05


class TestErrorPaths:
    def test_single_column_rejected(self):
        with pytest.raises(UsageError):
            fit_nodewise(np.ones((5, 1)), 0)

    def test_zero_column_rejected(self):
        x = np.ones((5, 3))
        x[:, 1] = 0.0
        with pytest.raises(UsageError):
            fit_nodewise(x, 1)

    def test_near_dependent_column_collapses_scale(self):
        # a column that is a tiny multiple of another has residual scale
        # below the floor after one alternation
        rng = np.random.default_rng(28)
        x1 = rng.standard_normal(20)
        x = np.column_stack([1e-13 * x1, x1])
        with pytest.raises(NumericError, match="collapsed"):
            fit_nodewise(x, 0, variant="scaled_lasso")

    def test_unit_scale_duplicate_reaches_tiny_fixed_point(self):
        # at unit scale the alternation stops at a tiny but positive scale
        # (the absolute stopping rule fires before the collapse threshold)
        rng = np.random.default_rng(29)
        x0 = rng.standard_normal(20)
        x = np.column_stack([x0, x0])
        fit = fit_nodewise(x, 0, variant="scaled_lasso")
        assert 0.0 < fit.tau_hat < 1e-6

    def test_unknown_variant_rejected(self):
        with pytest.raises(UsageError):
            fit_nodewise(np.ones((4, 2)), 0, variant="other")
