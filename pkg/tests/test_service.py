import numpy as np
import pytest
from fastapi.testclient import TestClient

from mtlasso.core import matrix_to_json_obj
from mtlasso.service.app import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app(), raise_server_exceptions=False)


@pytest.fixture(scope="module")
def small_problem():
    rng = np.random.default_rng(50)
    x = rng.standard_normal((40, 10))
    b = np.zeros((10, 2))
    b[[1, 4]] = 0.8
    y = x @ b + 0.4 * rng.standard_normal((40, 2))
    return x, y, b


def mat(m):
    return matrix_to_json_obj(np.atleast_2d(np.asarray(m, dtype=float)))


class TestHealth:
    def test_health(self, client):
        resp = client.get("/health")
        assert resp.status_code == 200
        assert resp.json()["status"] == "ok"


class TestFitEndpoint:
    def test_explicit_lambda(self, client, small_problem):
        x, y, _ = small_problem
        resp = client.post("/fit", json={"x": mat(x), "y": mat(y), "lam": 0.05})
        assert resp.status_code == 200
        body = resp.json()
        assert body["lambda_mode"] == "explicit"
        assert body["support"] == sorted(body["support"])
        assert body["kkt_residual"] <= 1e-6
        assert body["b_hat"]["rows"] == 10 and body["b_hat"]["cols"] == 2

    def test_auto_lambda_reports_pilot(self, client, small_problem):
        x, y, _ = small_problem
        resp = client.post("/fit", json={"x": mat(x), "y": mat(y)})
        assert resp.status_code == 200
        body = resp.json()
        assert body["lambda_mode"] == "auto"
        assert body["sigma_pilot"] > 0

    def test_dimension_mismatch_is_usage_error(self, client):
        resp = client.post("/fit", json={"x": mat(np.ones((3, 2))), "y": mat(np.ones((4, 1))), "lam": 0.1})
        assert resp.status_code == 400
        assert resp.json()["error"]["kind"] == "usage"

    def test_malformed_payload_rejected(self, client):
        resp = client.post("/fit", json={"x": {"rows": 2, "cols": 2, "data": [1.0]}, "y": mat(np.ones((2, 1)))})
        assert resp.status_code == 422

    def test_convergence_error_kind(self, client, small_problem):
        x, y, _ = small_problem
        resp = client.post("/fit", json={
            "x": mat(x), "y": mat(y), "lam": 0.02,
            "options": {"max_iters": 1},
        })
        assert resp.status_code == 422
        assert resp.json()["error"]["kind"] == "convergence"


class TestInteractionEndpoint:
    def test_check_reports_cross_method_difference(self, client, small_problem):
        x, y, _ = small_problem
        fit = client.post("/fit", json={"x": mat(x), "y": mat(y), "lam": 0.05}).json()
        resp = client.post("/interaction", json={
            "x": mat(x),
            "b_hat": fit["b_hat"],
            "lam": fit["lambda_used"],
            "check_against_naive": True,
        })
        assert resp.status_code == 200
        report = resp.json()["report"]
        assert report["max_abs_diff_vs_naive"] <= 1e-8
        assert report["symmetric"] is True
        assert report["op_norm"] <= report["support_size"] + 1e-6

    def test_shape_mismatch_rejected(self, client):
        resp = client.post("/interaction", json={
            "x": mat(np.ones((5, 3))), "b_hat": mat(np.ones((4, 2))), "lam": 0.1,
        })
        assert resp.status_code == 400


class TestCiEndpoint:
    def test_known_sigma_with_j(self, client, small_problem):
        x, y, _ = small_problem
        resp = client.post("/ci", json={
            "x": mat(x), "y": mat(y), "lam": 0.05, "alpha": 0.05,
            "variant": "known", "j": 1, "sigma_mat": mat(np.eye(10)),
        })
        assert resp.status_code == 200
        body = resp.json()
        assert body["lower"] < body["center"] < body["upper"]
        assert body["variant"] == "known_sigma"

    def test_unknown_sigma_with_nodewise(self, client, small_problem):
        x, y, _ = small_problem
        resp = client.post("/ci", json={
            "x": mat(x), "y": mat(y), "lam": 0.05, "variant": "unknown", "j": 1,
        })
        assert resp.status_code == 200
        assert resp.json()["variant"] == "unknown_sigma"

    def test_known_without_sigma_rejected(self, client, small_problem):
        x, y, _ = small_problem
        resp = client.post("/ci", json={
            "x": mat(x), "y": mat(y), "lam": 0.05, "variant": "known", "j": 1,
        })
        assert resp.status_code == 400
        assert "sigma_mat" in resp.json()["error"]["message"]


class TestEllipsoidAndTestRow:
    def test_ellipsoid_known(self, client, small_problem):
        x, y, _ = small_problem
        resp = client.post("/ellipsoid", json={
            "x": mat(x), "y": mat(y), "lam": 0.05, "variant": "hat_E",
            "j": 4, "sigma_mat": mat(np.eye(10)),
        })
        assert resp.status_code == 200
        body = resp.json()
        assert len(body["u"]) == 2
        assert body["C"]["rows"] == 2
        assert body["q"] > 0

    def test_test_row_active_row_rejects(self, client, small_problem):
        x, y, _ = small_problem
        resp = client.post("/test-row", json={
            "x": mat(x), "y": mat(y), "lam": 0.05,
            "variant": "check_E_sigma_hat", "j": 4, "sigma_mat": mat(np.eye(10)),
        })
        assert resp.status_code == 200
        assert resp.json()["reject"] is True

    def test_test_row_null_row_usually_accepts(self, client, small_problem):
        x, y, _ = small_problem
        resp = client.post("/test-row", json={
            "x": mat(x), "y": mat(y), "lam": 0.05,
            "variant": "check_E_sigma_hat_j", "j": 7,
        })
        assert resp.status_code == 200
        assert resp.json()["reject"] is False


class TestSimulateEndpoint:
    def test_small_campaign(self, client):
        resp = client.post("/simulate", json={
            "config": {
                "n": 50, "p": 30, "t": 2, "s": 2, "s_omega": 2,
                "n_sim": 3, "seed": 77,
                "variants": ["normal_known", "chi_sigma_hat"],
                "with_width": False,
            },
            "threads": 1,
        })
        assert resp.status_code == 200
        body = resp.json()
        assert len(body["replicates"]) == 3
        assert body["summary"]["n_completed"] == 3
        assert set(body["summary"]["pivots"]) == {"normal_known", "chi_sigma_hat"}

    def test_invalid_config_rejected(self, client):
        resp = client.post("/simulate", json={
            "config": {"n": 50, "p": 30, "s": 40, "n_sim": 1},
            "threads": 1,
        })
        assert resp.status_code == 400
