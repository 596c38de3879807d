import json
import math
import os
from pathlib import Path

import pytest

import bfverify

PROBLEMS = Path(os.environ.get("BFV_PROBLEMS", Path(__file__).resolve().parents[2] / "problems"))


def test_alpha_cut():
    t = bfverify.TriangularFuzzyNumber(0.25, 0.5, 0.75)
    lo, hi = bfverify.alpha_cut(t, 0.2)
    assert lo == pytest.approx(0.30)
    assert hi == pytest.approx(0.70)
    assert bfverify.alpha_cut(t, 1.0) == (0.5, 0.5)
    with pytest.raises(ValueError):
        bfverify.TriangularFuzzyNumber(1, 0, 2)


def test_expressions():
    g = bfverify.parse("x1^beta * x2 + gamma", ["beta", "gamma"])
    assert sorted(g.free_variables) == ["beta", "gamma", "x1", "x2"]
    d = bfverify.differentiate(g, "x1")
    assert str(d) == "beta * x1^(beta - 1) * x2"
    value = bfverify.evaluate(d, {"x1": 4.0, "x2": 3.0, "beta": 0.5, "gamma": 1.0})
    assert value == pytest.approx(0.75)
    with pytest.raises(bfverify.ParseError):
        bfverify.parse("x1 + * x2")
    with pytest.raises(bfverify.EvalError):
        bfverify.evaluate(bfverify.parse("x1 / x2"), {"x1": 1.0, "x2": 0.0})


def test_verify_worked_example():
    p = bfverify.load_problem(PROBLEMS / "worked_example.json")
    assert p.name == "worked-example"
    assert p.parameters["beta"].peak == 0.5
    v = bfverify.verify(p)
    assert v.outcome == "BF_SOLUTION"
    assert [c.name for c in v.checks] == [
        "structure", "fuzzy_validity", "differentiability", "equality", "boundary"]
    assert v.check("equality").worst_violation <= 1e-8
    report = json.loads(bfverify.report_json(v, p.name))
    assert report["outcome"] == "BF_SOLUTION"
    assert report["checks"][4]["note"] == "no conditions"


def test_wrong_rhs():
    v = bfverify.verify(bfverify.load_problem(PROBLEMS / "wrong_F.json"))
    assert v.outcome == "EQUALITY_FAILS"
    eq = v.check("equality")
    assert not eq.passed
    assert eq.worst_violation > 0.1
    assert eq.location[1] == pytest.approx(5.0)


def test_curves_and_grid_override():
    p = bfverify.load_problem(PROBLEMS / "worked_example.json")
    grid = p.grid
    grid.n_x1, grid.n_x2, grid.n_alpha = 3, 3, 2
    p.grid = grid
    rows = bfverify.curves_csv(p).splitlines()
    assert rows[0] == "role,x1,x2,alpha,lower,upper"
    assert len(rows) == 1 + 3 * 3 * 3 * 2
    for row in rows[1:]:
        role, x1, x2, alpha, lower, upper = row.split(",")
        if role == "GAMMA":
            a = float(alpha)
            ratio = float(x2) / float(x1)
            assert math.isclose(float(lower), (0.25 + 0.25 * a) * ratio, rel_tol=1e-12, abs_tol=1e-15)
            assert math.isclose(float(upper), (0.75 - 0.25 * a) * ratio, rel_tol=1e-12, abs_tol=1e-15)


def test_schema_errors():
    with pytest.raises(bfverify.SchemaError, match="/parameters/beta"):
        bfverify.parse_problem(json.dumps({
            "G": "x1 * x2", "F": "x2 / x1",
            "parameters": {"beta": [1, 0, 2]},
            "domain": {"x1": [1, 2], "x2": [1, 2]},
        }))
    with pytest.raises(bfverify.IoError):
        bfverify.load_problem(PROBLEMS / "missing.json")


def test_round_trip():
    p = bfverify.load_problem(PROBLEMS / "boundary_example.json")
    again = bfverify.parse_problem(p.to_json())
    assert again.to_json() == p.to_json()
    assert bfverify.verify(again, threads=2).outcome == "BF_SOLUTION"
