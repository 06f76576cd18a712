import json
import math

import numpy as np
import pytest

import otpalm


def test_generate_and_solve_classical():
    prob = otpalm.gen_classical(20, 20, seed=3)
    assert prob.m == 20 and prob.n == 20
    assert prob.preset == "classical"
    assert prob.validate() == []
    rep = otpalm.solve(prob, rho=0.01, tol=1e-6)
    assert rep["status"] == "Converged"
    assert rep["eta"] < 1e-6
    X = np.asarray(rep["X"])
    assert X.shape == (20, 20)
    assert abs(X.sum() - 1.0) < 1e-6
    assert abs(rep["pobj"] - rep["dobj"]) < 1e-4 * (1 + abs(rep["pobj"]))


def test_tiny_lp_against_oracle():
    cost = np.array([[0.0, 1.0], [1.0, 0.0]])
    prob = otpalm.build_classical(cost, np.array([0.5, 0.5]), np.array([0.5, 0.5]))
    rep = otpalm.solve(prob)
    ref = otpalm.lp_oracle(prob)
    assert rep["status"] == "Converged"
    assert abs(rep["pobj"] - ref["objective"]) < 1e-6


def test_prox_values():
    x = np.array([3.0, 4.0])
    assert np.allclose(otpalm.prox_norm(1.0, x), [2.4, 3.2])
    assert np.allclose(otpalm.prox_group(1.0, 1.0, 1.0, 1.0, x), [1.2, 1.6])


def test_instance_roundtrip(tmp_path):
    prob = otpalm.gen_group_da(8, 6, m1=4, lambda1=1.0, lambda2=1.0, seed=5)
    assert prob.group_count == 12
    path = str(tmp_path / "inst.json")
    otpalm.save_instance(prob, path)
    with open(path) as f:
        doc = json.load(f)
    assert doc["m"] == 8 and len(doc["groups"]) == 12
    back = otpalm.load_instance(path)
    assert back.m == 8 and back.lambda1 == 1.0


def test_martingale_and_barycenters():
    prob = otpalm.gen_martingale(15, 15, seed=4)
    rep = otpalm.solve(prob)
    assert rep["status"] == "Converged"
    X = np.asarray(rep["X"])
    mapped = otpalm.barycentric_map(X, np.ones((prob.n, 1)))
    finite = [p for p in mapped if p is not None]
    assert len(finite) == prob.m
    for p in finite:
        assert math.isclose(p[0], 1.0, rel_tol=1e-6)


def test_warm_start_reduces_initial_residual():
    prob = otpalm.gen_classical(25, 25, seed=9)
    cold = otpalm.solve(prob, warmstart=False)
    warm = otpalm.solve(prob, warmstart=True)
    assert warm["initial_eta"] < cold["initial_eta"]


def test_socp_export(tmp_path):
    prob = otpalm.gen_group_da(6, 4, m1=3, lambda1=1.0, lambda2=1.0, seed=2)
    path = str(tmp_path / "inst.socp")
    otpalm.export_socp(prob, path)
    head = open(path).readline().strip()
    assert head == "OTPALM-SOCP 1"
    lp = otpalm.gen_classical(4, 4, seed=2)
    with pytest.raises(RuntimeError):
        otpalm.export_socp(lp, str(tmp_path / "lp.socp"), require_cones=True)
