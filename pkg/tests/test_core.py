import math

import numpy as np
import pytest

from mtlasso.core import (
    ProblemData,
    RegularizationSpec,
    InferenceTarget,
    default_lambda,
    group_norm_21,
    load_matrix,
    matrix_from_json_obj,
    matrix_to_json_obj,
    save_matrix,
)
from mtlasso.errors import UsageError


class TestGroupNorm:
    def test_zero_matrix(self):
        assert group_norm_21(np.zeros((4, 3))) == 0.0

    def test_three_four_five_row(self):
        b = np.array([[3.0, 4.0], [0.0, 0.0]])
        assert group_norm_21(b) == 5.0

    def test_matches_scalar_double_loop(self):
        rng = np.random.default_rng(42)
        b = rng.standard_normal((3, 2))
        # naive double-loop oracle
        expected = 0.0
        for j in range(3):
            acc = 0.0
            for t in range(2):
                acc += b[j, t] ** 2
            expected += math.sqrt(acc)
        assert group_norm_21(b) == pytest.approx(expected, rel=1e-15)

    def test_rejects_non_finite(self):
        b = np.ones((2, 2))
        b[0, 1] = np.nan
        with pytest.raises(UsageError):
            group_norm_21(b)

    def test_triangle_inequality_and_homogeneity(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            a = rng.standard_normal((5, 3))
            b = rng.standard_normal((5, 3))
            c = float(rng.standard_normal())
            lhs = group_norm_21(a + b)
            rhs = group_norm_21(a) + group_norm_21(b)
            assert lhs <= rhs * (1 + 1e-12)
            assert group_norm_21(c * a) == pytest.approx(abs(c) * group_norm_21(a), rel=1e-12)


class TestDefaultLambda:
    def test_reference_experiment_value(self):
        # closed form at n=2000, p=6000, T=10, s=15, sigma=1, max diag 1, etas 0:
        # (1/sqrt(20000)) * (1 + sqrt(0.2 * log(400)))
        val = default_lambda(2000, 6000, 10, 15, sigma=1.0, sigma_jj_max=1.0)
        expected = (1.0 + math.sqrt(0.2 * math.log(400.0))) / math.sqrt(20000.0)
        assert val == pytest.approx(expected, rel=1e-15)
        assert val == pytest.approx(0.014811522932275376, rel=1e-12)

    def test_scalar_calculator_oracle(self):
        # n=100, p=400, T=4, s=4, sigma=1, diag=1: direct scalar evaluation
        n, p, t, s = 100, 400, 4, 4
        expected = (1.0 / math.sqrt(n * t)) * (1.0 + math.sqrt(2.0 / t * math.log(p / s)))
        assert default_lambda(n, p, t, s) == pytest.approx(expected, rel=1e-15)

    def test_eta_factors_multiply(self):
        base = default_lambda(100, 50, 2, 5)
        assert default_lambda(100, 50, 2, 5, eta1=0.1, eta2=0.2) == pytest.approx(
            1.1 * 1.2 * base, rel=1e-15
        )

    def test_s_at_least_p_rejected(self):
        with pytest.raises(UsageError):
            default_lambda(100, 50, 2, 50)
        with pytest.raises(UsageError):
            default_lambda(100, 50, 2, 60)

    def test_monotone_in_n_t_sigma(self):
        grid_n = [50, 100, 200, 400]
        vals = [default_lambda(n, 500, 3, 5) for n in grid_n]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        grid_t = [1, 2, 4, 8]
        vals = [default_lambda(100, 500, t, 5) for t in grid_t]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        grid_sigma = [0.5, 1.0, 2.0]
        vals = [default_lambda(100, 500, 3, 5, sigma=s) for s in grid_sigma]
        assert all(a < b for a, b in zip(vals, vals[1:]))


class TestProblemData:
    def test_row_mismatch_rejected(self):
        with pytest.raises(UsageError):
            ProblemData(np.ones((3, 2)), np.ones((4, 1)))

    def test_non_finite_rejected(self):
        x = np.ones((3, 2))
        x[1, 0] = np.inf
        with pytest.raises(UsageError):
            ProblemData(x, np.ones((3, 1)))

    def test_dimensions_exposed(self):
        d = ProblemData(np.ones((5, 3)), np.ones((5, 2)))
        assert (d.n, d.p, d.n_tasks) == (5, 3, 2)


class TestSpecTypes:
    def test_regularization_requires_positive_lambda(self):
        with pytest.raises(UsageError):
            RegularizationSpec(lam=0.0)
        spec = RegularizationSpec(lam=0.1, eta1=0.0, eta2=0.0)
        assert spec.sparsity_guess_s == 1

    def test_inference_target_rejects_zero_vectors(self):
        with pytest.raises(UsageError):
            InferenceTarget(np.zeros(3), np.ones(2))
        with pytest.raises(UsageError):
            InferenceTarget(np.ones(3), np.zeros(2))


class TestMatrixIO:
    def test_json_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(1)
        m = rng.standard_normal((7, 3)) * np.exp(rng.standard_normal((7, 3)) * 10)
        path = tmp_path / "m.json"
        save_matrix(m, path)
        back = load_matrix(path)
        assert back.dtype == np.float64
        assert np.array_equal(back, m)  # bit-exact

    def test_json_container_schema(self):
        obj = matrix_to_json_obj(np.array([[1.0, 2.0], [3.0, 4.0]]))
        assert obj == {"rows": 2, "cols": 2, "data": [1.0, 2.0, 3.0, 4.0]}
        assert np.array_equal(matrix_from_json_obj(obj), [[1.0, 2.0], [3.0, 4.0]])

    def test_csv_round_trip(self, tmp_path):
        rng = np.random.default_rng(2)
        m = rng.standard_normal((4, 5))
        path = tmp_path / "m.csv"
        save_matrix(m, path)
        back = load_matrix(path)
        assert np.array_equal(back, m)  # repr round-trips float64 through text

    def test_csv_single_row_keeps_2d(self, tmp_path):
        path = tmp_path / "row.csv"
        save_matrix(np.array([[1.0, 2.0, 3.0]]), path)
        assert load_matrix(path).shape == (1, 3)

    def test_malformed_container_rejected(self):
        with pytest.raises(UsageError):
            matrix_from_json_obj({"rows": 2, "cols": 2, "data": [1.0]})

    def test_corrupt_csv_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1.0,2.0\nnot,a number\n")
        with pytest.raises(UsageError):
            load_matrix(path)
