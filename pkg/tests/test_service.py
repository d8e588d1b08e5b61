import math

import pytest
from fastapi.testclient import TestClient

from orliczmp.service import create_app

from conftest import example1_conjugate_exact


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def test_health(client):
    r = client.get("/health")
    assert r.status_code == 200 and r.json() == {"status": "ok"}


def test_registry_lists_builtins(client):
    data = client.get("/api/registry").json()
    assert "example1" in data["gfunctions"]
    assert "plaplacian_test" in data["problems"]


def test_indices_endpoint(client):
    r = client.post("/api/indices", json={"g": {"name": "example1"}})
    assert r.status_code == 200
    d = r.json()
    assert d["p_g"] == pytest.approx(2.0, abs=1e-3)
    assert d["q_g"] == pytest.approx(4.0, abs=1e-3)
    assert d["q_g_inf"] == pytest.approx(4.0, abs=1e-3)
    assert len(d["shells"]) > 0


def test_indices_sampling_override(client):
    r = client.post("/api/indices", json={
        "g": {"name": "power", "params": [3.0]},
        "sampling": {"n_radii": 21, "n_directions": 8},
    })
    d = r.json()
    assert len(d["shells"]) == 21
    assert d["p_g"] == pytest.approx(3.0, abs=1e-9)


def test_indices_unknown_name_422(client):
    r = client.post("/api/indices", json={"g": {"name": "mystery"}})
    assert r.status_code == 422
    assert "registered" in r.json()["detail"]


def test_conjugate_endpoint(client):
    r = client.post("/api/conjugate", json={
        "g": {"name": "example1"}, "y": [1.0, 0.5]})
    assert r.status_code == 200
    assert r.json()["value"] == pytest.approx(
        example1_conjugate_exact(1.0, 0.5), rel=1e-6)


def test_conjugate_wrong_dimension_422(client):
    r = client.post("/api/conjugate", json={"g": {"name": "example1"}, "y": [1.0]})
    assert r.status_code == 422


def test_norm_endpoint_constant(client):
    r = client.post("/api/norm", json={
        "g": {"name": "power", "params": [2.0]}, "T": 0.5, "const": 1.0})
    assert r.json()["value"] == pytest.approx(1.0, rel=1e-9)


def test_norm_endpoint_values(client):
    vals = [[math.sin(-1.0 + 2.0 * i / 32)] for i in range(32)]
    r = client.post("/api/norm", json={
        "g": {"name": "power", "params": [2.0]}, "T": 1.0,
        "values": vals, "which": "sobolev"})
    assert r.status_code == 200 and r.json()["value"] > 0


def test_norm_requires_one_input(client):
    r = client.post("/api/norm", json={"g": {"name": "power", "params": [2.0]}})
    assert r.status_code == 422


def test_check_endpoint(client):
    r = client.post("/api/check", json={"name": "plaplacian_test", "m": 128})
    d = r.json()
    assert d["theorem_passes"] is True
    statuses = {v["name"]: v["status"] for v in d["verdicts"]}
    assert statuses["A3"] == "pass" and statuses["theorem1"] == "pass"
    assert d["rho"] == pytest.approx(0.15, rel=1e-6)


def test_rim_endpoint(client):
    r = client.post("/api/rim", json={
        "problem": {"name": "plaplacian_test", "m": 64},
        "solver": {"rim_samples": 16},
    })
    d = r.json()
    assert d["alpha"] > 0
    assert d["sampled_min"] >= d["alpha"] - 1e-8


def test_solve_endpoint(client):
    r = client.post("/api/solve", json={
        "problem": {"name": "plaplacian_test", "m": 64},
        "solver": {"path_points": 9, "max_outer_iters": 40, "rim_samples": 8},
    })
    assert r.status_code == 200
    d = r.json()
    assert d["converged"] is True
    assert d["j_value"] == pytest.approx(2.0, rel=1e-9)
    assert len(d["t"]) == 64 and len(d["u"]) == 64 and len(d["du"]) == 64


def test_solve_endpoint_rejects_uncertified(client):
    r = client.post("/api/solve", json={
        "problem": {"name": "plaplacian_test", "m": 64,
                    "params": {"f_amplitude": 5.0}}})
    assert r.status_code == 422
    assert "not positive" in r.json()["detail"]
