import csv
import io
import json
import math

import pytest

from qglab.config import ConfigError
from qglab.experiments import (
    PRESETS,
    TREND_FLOOR,
    list_presets,
    parse_plan,
    preset_plan,
    run_plan,
    standard_pass,
    trend_ok,
    with_overrides,
)

FAST = ["t-weyl-interval", "t-gap-finite-path", "l-local-weyl", "r-heat-bracket", "t-gap-diverge"]
SLOW = ["t-modified-weyl", "t-gen-ii", "t-gen-i"]


def test_eight_presets():
    names = [n for n, _, _ in list_presets()]
    assert len(names) == 8 and set(names) == set(FAST + SLOW)


@pytest.mark.parametrize("name", FAST)
def test_fast_presets_pass(name):
    rep = run_plan(preset_plan(name))
    assert rep.passed, rep.checks


@pytest.mark.slow
@pytest.mark.parametrize("name", SLOW)
def test_slow_presets_pass(name):
    rep = run_plan(preset_plan(name))
    assert rep.passed, rep.checks


def test_trend_rule():
    assert trend_ok([0.3, 0.2, 0.1], 0.1)
    assert not trend_ok([0.3, 0.1, 0.2], 0.1)
    # below TREND_FLOOR * tol a small uptick is noise
    assert trend_ok([0.3, 0.01, 0.04], 0.1)
    assert not trend_ok([0.3, 0.01, TREND_FLOOR * 0.1 + 1e-9], 0.1)
    assert standard_pass([0.5, 0.2, 0.05], 0.1)
    assert not standard_pass([0.5, 0.2, 0.15], 0.1)
    assert not standard_pass([], 0.1)


def test_report_schema():
    rep = run_plan(preset_plan("t-weyl-interval"))
    rows = list(csv.DictReader(io.StringIO(rep.csv_text())))
    assert list(rows[0]) == ["tag", "M", "N", "x", "t", "lambda", "observed", "predicted", "deviation"]
    assert len(rows) == len(rep.rows) == 5
    assert math.isclose(float(rows[-1]["observed"]), 1.001)
    doc = json.loads(rep.json_text())
    for key in ("tag", "description", "prediction", "predicted_limit", "tolerance", "extrapolated", "checks",
                "passed", "final_observed", "final_predicted", "final_deviation", "n_rows", "notes"):
        assert key in doc
    assert doc["passed"] is True and doc["tag"] == "T-Weyl"


def test_deterministic():
    a = run_plan(preset_plan("r-heat-bracket"))
    b = run_plan(preset_plan("r-heat-bracket"))
    assert a.csv_text() == b.csv_text() and a.json_text() == b.json_text()


def test_overrides():
    p = with_overrides(preset_plan("t-gap-finite-path"), tol=0.2, N=1500, seed=3)
    assert p.tol == 0.2 and p.N_grid == (500, 1000, 1500) and p.seed == 3
    h = with_overrides(preset_plan("r-heat-bracket"), seed=11)
    assert h.params["seed"] == 11


def test_seed_changes_heat_samples():
    a = run_plan(with_overrides(preset_plan("r-heat-bracket"), seed=1))
    b = run_plan(with_overrides(preset_plan("r-heat-bracket"), seed=2))
    assert a.passed and b.passed
    assert a.notes != b.notes or a.csv_text() != b.csv_text()


def test_finite_sigma_does_not_diverge():
    # negative control: with summable couplings the divergence probe must fail
    plan = parse_plan({
        "preset": "t-gap-diverge",
        "graph": {"family": "finite_length", "L": math.pi, "length_rule": {"kind": "inverse_square"},
                  "sigma_rule": {"kind": "explicit", "values": [1.0]}},
        "M_grid": [1, 2, 4, 8],
    })
    rep = run_plan(plan)
    assert not rep.passed
    assert not rep.checks["crosses_threshold"]


@pytest.mark.parametrize(
    "obj",
    [
        {"preset": "nope"},
        {"preset": "t-weyl-interval", "bogus": 1},
        {"tag": "T-Weyl"},
        {"preset": "t-weyl-interval", "tag": "T-Unknown"},
        {"preset": "t-gap-finite-path", "N_grid": [1000, 500]},
        {"preset": "t-gap-finite-path", "M_grid": []},
        {"preset": "t-gap-finite-path", "tol": 0},
        {"preset": "t-gap-finite-path", "params": {"lam_grid": [1.0]}},
        {"preset": "t-gap-finite-path", "params": []},
    ],
)
def test_plan_rejects(obj):
    with pytest.raises(ConfigError):
        parse_plan(obj)


def test_presets_parse():
    for name in PRESETS:
        assert preset_plan(name).tag == PRESETS[name]["tag"]
