import json
import os
from pathlib import Path

import numpy as np
import pytest

import deepteam as dt

MODELS = Path(os.environ.get("DEEPTEAM_MODELS", Path(__file__).resolve().parents[2] / "models"))


def test_version():
    assert dt.__version__.count(".") == 2


def test_reference_model_validates():
    m = dt.load_model(str(MODELS / "s1.json"))
    assert dt.validate(m) == []
    assert m.n == 2 and m.T == 2
    assert m.dims["dx"] == 1
    np.testing.assert_array_equal(m.alpha, [1.0, 1.0])


def test_bad_cost_is_reported():
    m = dt.load_model(str(MODELS / "s1_bad_r.json"))
    assert any("R" in v for v in dt.validate(m))


def test_malformed_json_raises():
    with pytest.raises(dt.ModelError):
        dt.model_from_json(json.dumps({"n": 2}))


def test_solve_values():
    s = dt.solve(dt.reference_model_s1())
    assert s["theta"][0][0, 0] == pytest.approx(-0.5)
    assert s["Sigma_post"][0][0, 0] == pytest.approx(0.5)
    assert len(s["P"]) == 2


def test_exact_costs():
    m = dt.reference_model_s1()
    assert dt.exact_cost(m, "zero") == pytest.approx(3.0, rel=1e-14)
    assert dt.exact_cost(m, "optimal") == pytest.approx(2.75, rel=1e-12)


def test_simulate_matches_exact():
    m = dt.reference_model_s2()
    r = dt.simulate(m, "zero", seed=3, rollouts=20000, workers=2)
    assert len(r["costs"]) == 20000
    assert abs(r["mean"] - dt.exact_cost(m, "zero")) < 5 * r["standard_error"]


def test_unknown_strategy():
    with pytest.raises(ValueError):
        dt.exact_cost(dt.reference_model_s1(), "greedy")


def test_model_json_roundtrip():
    m = dt.reference_model_s2(3)
    back = dt.model_from_json(m.to_json())
    assert dt.schedules_json(back) == dt.schedules_json(m)


def test_convergence_rows():
    fam = dt.load_model(str(MODELS / "meanfield_family.json"))
    c = dt.convergence(fam, [4, 8], rollouts=200, seed=1)
    assert [r["n"] for r in c["rows"]] == [4, 8]
    assert c["slope_max_sigma_bar"] == pytest.approx(-1.0, abs=1e-9)
