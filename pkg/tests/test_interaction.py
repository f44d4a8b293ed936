import numpy as np
import pytest

from conftest import random_problem
from mtlasso.errors import NumericError, UsageError
from mtlasso.interaction import (
    InteractionMatrix,
    correction_matrix,
    hessian_block,
    interaction_fast,
    interaction_naive,
)
from mtlasso.solver import fit_multitask_lasso


def synthetic_active(rng, n, k, t, scale=1.0):
    """Design plus a coefficient matrix whose first k rows are active."""
    p = k + rng.integers(0, 3)
    x = rng.standard_normal((n, p))
    b = np.zeros((p, t))
    b[:k] = scale * rng.standard_normal((k, t))
    # keep rows clearly away from zero
    norms = np.sqrt((b[:k] ** 2).sum(axis=1))
    b[:k] *= (1.0 + 1.0 / np.maximum(norms, 1e-3))[:, None]
    return x, b, list(range(k))


class TestHessianBlock:
    def test_t1_is_zero(self):
        b = np.array([[2.0]])
        h = hessian_block(b, 0, lam=1.3)
        assert h.shape == (1, 1)
        assert h[0, 0] == 0.0

    def test_unit_row_projection(self):
        b = np.array([[1.0, 0.0]])
        h = hessian_block(b, 0, lam=1.0)
        assert np.allclose(h, [[0.0, 0.0], [0.0, 1.0]], atol=1e-15)

    def test_eigenstructure_oracle(self):
        rng = np.random.default_rng(11)
        row = rng.standard_normal(4)
        b = row[None, :]
        lam = 0.7
        h = hessian_block(b, 0, lam)
        # eigendecomposition oracle: one zero eigenvalue along the row,
        # three equal to lam/||row||
        evals = np.sort(np.linalg.eigvalsh(h))
        nrm = np.linalg.norm(row)
        assert evals[0] == pytest.approx(0.0, abs=1e-9)
        assert np.allclose(evals[1:], lam / nrm, atol=1e-9)
        assert np.allclose(h @ row, 0.0, atol=1e-9)

    def test_zero_row_rejected(self):
        with pytest.raises(UsageError):
            hessian_block(np.zeros((2, 3)), 0, 1.0)


class TestNaive:
    def test_empty_support_zero_matrix(self):
        am = interaction_naive(np.ones((5, 2)), np.zeros((2, 3)), 0.1, [])
        assert np.all(am.a_hat == 0.0)
        assert am.support_size == 0

    def test_t1_equals_support_size(self):
        rng = np.random.default_rng(12)
        x, b, supp = synthetic_active(rng, 25, 4, 1)
        am = interaction_naive(x, b, 0.2, supp)
        assert am.rank_ok
        assert am.a_hat[0, 0] == pytest.approx(len(supp), abs=1e-8)

    def test_cap_refusal_mentions_woodbury(self):
        rng = np.random.default_rng(13)
        x, b, supp = synthetic_active(rng, 10, 5, 2)
        with pytest.raises(UsageError, match="woodbury"):
            interaction_naive(x, b, 0.1, supp, pinv_cap=4)


class TestMethodEquivalence:
    @pytest.mark.parametrize("seed", range(8))
    def test_naive_matches_fast(self, seed):
        rng = np.random.default_rng(100 + seed)
        t = int(rng.integers(1, 6))
        k = int(rng.integers(1, 9))
        lam = 10.0 ** rng.uniform(-3, 0)
        x, b, supp = synthetic_active(rng, 40, k, t)
        a_naive = interaction_naive(x, b, lam, supp)
        a_fast = interaction_fast(x, b, lam, supp)
        assert np.max(np.abs(a_naive.a_hat - a_fast.a_hat)) <= 1e-8

    def test_fitted_instance_cross_method(self):
        rng = np.random.default_rng(14)
        data, _ = random_problem(rng, 40, 8, 3, s=4, fill=2.0)
        lam = 0.02
        fit = fit_multitask_lasso(data, lam)
        assert fit.support
        a_naive = interaction_naive(data.x, fit.b_hat, lam, fit.support)
        a_fast = interaction_fast(data.x, fit.b_hat, lam, fit.support)
        assert np.max(np.abs(a_naive.a_hat - a_fast.a_hat)) <= 1e-8

    def test_lambda_zero_forced_hessian_gives_diagonal(self):
        # with the penalty Hessian gone the stacked system inverts per block
        rng = np.random.default_rng(15)
        x, b, supp = synthetic_active(rng, 30, 5, 3)
        am = interaction_naive(x, b, 0.0, supp)
        off = am.a_hat - np.diag(np.diag(am.a_hat))
        assert np.max(np.abs(off)) <= 1e-10
        assert np.allclose(np.diag(am.a_hat), len(supp), atol=1e-8)


class TestStructuralProperties:
    @pytest.mark.parametrize("seed", range(5))
    def test_symmetry_psd_opnorm(self, seed):
        rng = np.random.default_rng(200 + seed)
        t = int(rng.integers(1, 5))
        x, b, supp = synthetic_active(rng, 50, int(rng.integers(1, 7)), t)
        lam = 0.05
        for am in (interaction_naive(x, b, lam, supp), interaction_fast(x, b, lam, supp)):
            assert am.max_asymmetry() <= 1e-10
            op = am.operator_norm()
            assert am.min_eigenvalue() >= -1e-10 * (1.0 + op)
            if am.rank_ok:
                assert op <= am.support_size + 1e-6


class TestCorrectionMatrix:
    def test_zero_interaction_gives_identity(self):
        am = InteractionMatrix(np.zeros((3, 3)), 0, "naive", True)
        assert np.allclose(correction_matrix(am, 50), np.eye(3), atol=1e-14)

    def test_t1_degrees_of_freedom_adjustment(self):
        rng = np.random.default_rng(16)
        x, b, supp = synthetic_active(rng, 30, 6, 1)
        am = interaction_fast(x, b, 0.1, supp)
        corr = correction_matrix(am, 30)
        assert corr.shape == (1, 1)
        assert corr[0, 0] == pytest.approx(1.0 / (1.0 - len(supp) / 30), rel=1e-8)

    def test_operator_norm_bound(self):
        # ||I - (I - A/n)^{-1}|| <= (|S|/n) / (1 - |S|/n) for PSD A with
        # ||A|| <= |S| < n
        rng = np.random.default_rng(17)
        t, k, n = 4, 6, 40
        m = rng.standard_normal((t, t))
        a = m @ m.T
        a *= k / np.linalg.norm(a, ord=2)  # PSD with operator norm exactly |S|
        am = InteractionMatrix(a, k, "naive", True)
        corr = correction_matrix(am, n)
        lhs = np.linalg.norm(np.eye(t) - corr, ord=2)
        assert lhs <= (k / n) / (1 - k / n) + 1e-10

    def test_support_reaching_n_rejected(self):
        am = InteractionMatrix(np.eye(2), 30, "naive", True)
        with pytest.raises(UsageError):
            correction_matrix(am, 30)

    def test_non_positive_definite_names_precondition(self):
        bad = InteractionMatrix(np.eye(2) * 100.0, 2, "naive", True)
        with pytest.raises(NumericError, match="positive definite"):
            correction_matrix(bad, 10)


class TestFallback:
    def test_woodbury_failure_falls_back_to_naive(self):
        # duplicated rows and tiny norms push the capacitance matrix toward
        # singularity; the woodbury route must match the naive answer anyway
        rng = np.random.default_rng(18)
        x = rng.standard_normal((30, 4))
        b = np.full((4, 2), 1e-9)
        lam = 1e-6
        supp = [0, 1, 2, 3]
        a_fast = interaction_fast(x, b, lam, supp, cond_limit=1.0)  # force fallback
        a_naive = interaction_naive(x, b, lam, supp)
        assert np.max(np.abs(a_fast.a_hat - a_naive.a_hat)) <= 1e-8
        assert a_fast.method == "naive"
