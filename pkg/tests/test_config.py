import math

import pytest

from qglab.config import ConfigError, parse_graph_config
from qglab.graph import Delta, Dirichlet


def test_explicit_path():
    g = parse_graph_config({"family": "explicit", "lengths": [1.0, 2.0], "sigmas": [0, "dirichlet", 1.5]}).build()
    assert g.lengths.tolist() == [1.0, 2.0]
    assert g.conditions == [Delta(0.0), Dirichlet(), Delta(1.5)]


def test_explicit_right_end_defaults_to_free():
    g = parse_graph_config({"family": "explicit", "lengths": [1.0]}).build()
    assert g.conditions == [Delta(0.0), Delta(0.0)]


def test_explicit_potentials():
    cfg = {"family": "explicit", "lengths": [1.0, 1.0], "potentials": [0.5, {"breakpoints": [0.5], "values": [0.0, 2.0]}]}
    g = parse_graph_config(cfg).build()
    assert g.potential_integral == pytest.approx(1.5)


def test_finite_length_family():
    cfg = {
        "family": "finite_length",
        "L": math.pi,
        "length_rule": {"kind": "geometric", "ratio": 0.5},
        "sigma_rule": {"kind": "explicit", "values": [1.0, 2.0]},
        "M": 3,
    }
    c = parse_graph_config(cfg)
    g = c.build()
    assert g.total_length == pytest.approx(math.pi, rel=1e-15)
    assert len(c.build(5).edges) == len(g.edges) + 2
    assert g.conditions[0] == Delta(1.0)


def test_harmonic_family():
    g = parse_graph_config({"family": "harmonic", "M": 4}).build()
    assert g.lengths == pytest.approx([math.pi / m for m in range(1, 5)])
    assert all(isinstance(c, Dirichlet) for c in g.conditions)


def test_g0_attach_family():
    cfg = {
        "family": "g0_attach",
        "g0": {"kind": "star", "lengths": [1.0, 1.0, 1.0], "center": "delta:1"},
        "attach": {"edge": 0, "positions": {"kind": "geometric"}, "toward": "head"},
        "sigma_rule": {"kind": "explicit", "values": [0.5, 0.25]},
    }
    g = parse_graph_config(cfg).build()
    att = [v for v in g.vertices if v.attached]
    assert len(att) == 2 and sum(v.condition.strength for v in att) == pytest.approx(0.75)
    assert g.total_length == pytest.approx(3.0)


@pytest.mark.parametrize(
    "cfg",
    [
        {"family": "explicit", "lengths": [1.0], "typo": 1},
        {"family": "nope"},
        {"lengths": [1.0]},
        [],
        {"family": "explicit", "lengths": []},
        {"family": "explicit", "lengths": [-1.0]},
        {"family": "explicit", "lengths": [1.0], "sigmas": [-2.0, 0.0]},
        {"family": "explicit", "lengths": [1.0], "sigmas": ["delta:x"]},
        {"family": "explicit", "lengths": [1.0, 1.0], "potentials": [0.0]},
        {"family": "explicit", "lengths": [1.0], "sigmas": [0.0, 0.0, 0.0]},
        {"family": "harmonic", "M": 0},
        {"family": "harmonic", "M": 2.5},
        {"family": "harmonic", "M": True},
        {"family": "finite_length", "M": 2, "length_rule": {"kind": "squares"}},
        {"family": "finite_length", "M": 2, "sigma_rule": {"kind": "geometric", "ratio": 1.5}},
        {"family": "finite_length", "M": 2, "sigma_rule": {"kind": "explicit", "values": [1.0], "extra": 0}},
        {"family": "g0_attach", "g0": {"kind": "ring", "lengths": [1.0]}, "attach": {"edge": 0, "positions": [0.5]}},
        {"family": "g0_attach", "g0": {"kind": "star", "lengths": [1.0]}, "attach": {"edge": 3, "positions": [0.5]},
         "sigma_rule": {"kind": "explicit", "values": [1.0]}},
    ],
)
def test_rejects(cfg):
    with pytest.raises(ConfigError):
        parse_graph_config(cfg)


def test_error_names_the_key():
    with pytest.raises(ConfigError, match="typo"):
        parse_graph_config({"family": "explicit", "lengths": [1.0], "typo": 1})
