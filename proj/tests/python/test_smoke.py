import json
import math
import os
import subprocess

import numpy as np
import pytest

import pblab


def test_catalog():
    assert set(pblab.catalog()) == {
        "lasso", "sqrt-lasso", "group-lasso", "group-sqrt-lasso",
        "elastic-net", "slope", "fused", "trend-filter",
    }


def test_prox_and_norms():
    np.testing.assert_allclose(pblab.soft_threshold(np.array([3.0, -1.0, 0.5]), 1.0), [2.0, 0.0, 0.0])
    np.testing.assert_allclose(pblab.group_soft_threshold(np.array([3.0, 4.0]), 5.0), [0.0, 0.0])
    v = np.array([3.0, -4.0])
    assert pblab.dual_norm(v, 1) == pytest.approx(4)
    assert pblab.dual_norm(v, 2) == pytest.approx(5)
    assert pblab.dual_norm(v, math.inf) == pytest.approx(7)


def test_fused_pinv_matches_numpy():
    for p in range(2, 10):
        np.testing.assert_allclose(pblab.fused_pinv(p), np.linalg.pinv(pblab.difference_matrix(p)), atol=1e-10)


def test_solve_lasso_identity():
    out = pblab.solve("lasso", np.eye(2), np.array([3.0, 0.0]), np.array([2.0]))
    assert out["converged"]
    np.testing.assert_allclose(out["beta"], [2.0, 0.0])


def test_oracle_tuning_sqrt_lasso():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((60, 30))
    beta = np.zeros(30)
    beta[:3] = 0.3
    eps = rng.standard_normal(60)
    out = pblab.oracle_tuning("sqrt-lasso", X, beta, eps)
    assert out["fixed_point_residual"] <= 1e-7
    resid = np.linalg.norm(X @ beta + eps - X @ out["solution"]["beta"])
    assert out["lambda"][0] == pytest.approx(np.max(np.abs(X.T @ eps)) / resid, rel=1e-6)


def test_errors_map_to_python_exceptions():
    with pytest.raises(pblab.AssumptionViolated):
        pblab.solve("lasso", np.eye(2), np.zeros(2), np.array([1.0]))
    with pytest.raises(ValueError):
        pblab.solve("ridge", np.eye(2), np.ones(2), np.array([1.0]))


def test_run_trial():
    rec = pblab.run_trial(json.dumps({"estimator": "lasso", "n": 30, "p": 40}), 0)
    assert not rec["failed"]
    assert rec["holds_special2"]
    assert rec["lhs"] <= rec["rhs_special2"]


@pytest.mark.skipif("PBLAB_CLI" not in os.environ, reason="command-line tool not available")
def test_cli_catalog(tmp_path):
    res = subprocess.run([os.environ["PBLAB_CLI"], "catalog", "--out-dir", str(tmp_path)],
                         capture_output=True, text=True, check=True)
    assert "trend-filter" in res.stdout
    assert json.loads((tmp_path / "manifest.json").read_text())["command"] == "catalog"
