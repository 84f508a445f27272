"""JSON graph descriptions.

Every object is checked against a closed key set; unknown keys raise
ConfigError. See the README for the schema.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .graph import (
    Delta,
    GraphValidationError,
    LengthRule,
    MetricGraph,
    PathFamily,
    PiecewisePotential,
    SigmaSequence,
    as_condition,
    attach_delta_vertices,
    build_path_graph,
    combine_conditions,
    geometric_positions,
    star_graph,
    truncate_family,
)


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


FAMILIES = ("finite_length", "harmonic", "explicit", "g0_attach")

_KEYS = {
    "finite_length": {"family", "L", "length_rule", "sigma_rule", "M", "left", "right"},
    "harmonic": {"family", "M"},
    "explicit": {"family", "lengths", "sigmas", "left", "right", "potentials"},
    "g0_attach": {"family", "g0", "attach", "sigma_rule", "M"},
}


def check_keys(obj: Any, allowed: set[str], where: str, required: set[str] = frozenset()) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object, got {type(obj).__name__}")
    extra = set(obj) - allowed
    if extra:
        raise ConfigError(f"{where}: unknown key(s) {sorted(extra)}; allowed {sorted(allowed)}")
    missing = set(required) - set(obj)
    if missing:
        raise ConfigError(f"{where}: missing key(s) {sorted(missing)}")
    return obj


def _number(x, where: str, positive: bool = False, integer: bool = False):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {x!r}")
    if integer and (not float(x).is_integer()):
        raise ConfigError(f"{where}: expected an integer, got {x!r}")
    if not math.isfinite(x) or (positive and x <= 0):
        raise ConfigError(f"{where}: expected a {'positive ' if positive else ''}finite number, got {x!r}")
    return int(x) if integer else float(x)


def _condition(x, where: str):
    try:
        return as_condition(x)
    except (GraphValidationError, ValueError, TypeError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def parse_length_rule(obj) -> LengthRule:
    check_keys(obj, {"kind", "ratio", "values"}, "length_rule", {"kind"})
    try:
        return LengthRule(
            kind=obj["kind"],
            ratio=_number(obj.get("ratio", 0.5), "length_rule.ratio"),
            values=tuple(_number(v, "length_rule.values", positive=True) for v in obj.get("values", ())),
        )
    except GraphValidationError as exc:
        raise ConfigError(f"length_rule: {exc}") from None


def parse_sigma_rule(obj) -> SigmaSequence:
    check_keys(obj, {"kind", "values", "scale", "ratio"}, "sigma_rule", {"kind"})
    if obj["kind"] not in ("geometric", "harmonic", "explicit"):
        raise ConfigError(f"sigma_rule.kind must be geometric, harmonic or explicit, got {obj['kind']!r}")
    try:
        return SigmaSequence(
            kind=obj["kind"],
            values=tuple(_number(v, "sigma_rule.values") for v in obj.get("values", ())),
            scale=_number(obj.get("scale", 1.0), "sigma_rule.scale"),
            ratio=_number(obj.get("ratio", 0.5), "sigma_rule.ratio"),
        )
    except GraphValidationError as exc:
        raise ConfigError(f"sigma_rule: {exc}") from None


def _potential(obj, where: str) -> PiecewisePotential:
    if isinstance(obj, (int, float)) and not isinstance(obj, bool):
        return PiecewisePotential.constant(_number(obj, where))
    check_keys(obj, {"breakpoints", "values"}, where, {"values"})
    try:
        return PiecewisePotential(tuple(obj.get("breakpoints", ())), tuple(obj["values"]))
    except (GraphValidationError, TypeError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


@dataclass(frozen=True)
class GraphConfig:
    """Parsed graph description; ``build(M)`` truncates at any order."""

    family: str
    raw: dict = field(compare=False, repr=False)

    @property
    def M(self) -> int | None:
        return self.raw.get("M")

    @property
    def L(self) -> float:
        return float(self.raw.get("L", math.pi))

    @property
    def sigma(self) -> SigmaSequence | None:
        s = self.raw.get("sigma_rule")
        return parse_sigma_rule(s) if s is not None else None

    def with_family(self, **updates) -> "GraphConfig":
        raw = dict(self.raw)
        raw.update(updates)
        return parse_graph_config(raw)

    def build(self, M: int | None = None) -> MetricGraph:
        M = self.M if M is None else int(M)
        try:
            return _build(self.family, self.raw, M)
        except GraphValidationError as exc:
            raise ConfigError(str(exc)) from None


def parse_graph_config(obj) -> GraphConfig:
    if not isinstance(obj, dict):
        raise ConfigError("graph config must be a JSON object")
    fam = obj.get("family")
    if fam not in FAMILIES:
        raise ConfigError(f"family must be one of {FAMILIES}, got {fam!r}")
    check_keys(obj, _KEYS[fam], f"{fam} graph")
    if "M" in obj:
        M = _number(obj["M"], "M", positive=True, integer=True)
        obj = {**obj, "M": M}
    if fam == "finite_length":
        if "L" in obj:
            _number(obj["L"], "L", positive=True)
        if "length_rule" in obj:
            parse_length_rule(obj["length_rule"])
        if "sigma_rule" in obj:
            parse_sigma_rule(obj["sigma_rule"])
        for end in ("left", "right"):
            if end in obj:
                _condition(obj[end], end)
    elif fam == "explicit":
        check_keys(obj, _KEYS[fam], "explicit graph", {"lengths"})
        lengths = obj["lengths"]
        if not isinstance(lengths, list) or not lengths:
            raise ConfigError("lengths must be a nonempty list")
        for v in lengths:
            _number(v, "lengths", positive=True)
        for s in obj.get("sigmas", []):
            _condition(s, "sigmas")
        if "potentials" in obj and len(obj["potentials"]) != len(lengths):
            raise ConfigError("potentials needs one entry per edge")
    elif fam == "g0_attach":
        check_keys(obj, _KEYS[fam], "g0_attach graph", {"g0", "attach"})
        check_keys(obj["g0"], {"kind", "lengths", "center", "outer", "q", "sigmas"}, "g0", {"kind", "lengths"})
        if obj["g0"]["kind"] not in ("star", "path"):
            raise ConfigError("g0.kind must be star or path")
        check_keys(obj["attach"], {"edge", "positions", "toward"}, "attach", {"edge", "positions"})
        if "sigma_rule" in obj:
            parse_sigma_rule(obj["sigma_rule"])
    cfg = GraphConfig(fam, dict(obj))
    # surface construction errors at parse time
    if fam == "explicit":
        cfg.build()
    else:
        cfg.build(cfg.M or 1)
    return cfg


def _positions(spec, ell: float, M: int, toward: str) -> np.ndarray:
    if isinstance(spec, list):
        if len(spec) < M:
            raise ConfigError(f"attach.positions lists {len(spec)} points, M = {M}")
        return np.array([_number(p, "attach.positions") for p in spec[:M]])
    check_keys(spec, {"kind", "ratio"}, "attach.positions", {"kind"})
    if spec["kind"] == "geometric":
        return geometric_positions(ell, M, _number(spec.get("ratio", 0.5), "attach.positions.ratio"), toward)
    if spec["kind"] == "harmonic":
        d = ell / (np.arange(1, M + 1) + 1.0)
        return np.sort(ell - d) if toward == "head" else np.sort(d)
    raise ConfigError(f"attach.positions.kind must be geometric or harmonic, got {spec['kind']!r}")


def _build(fam: str, raw: dict, M: int | None) -> MetricGraph:
    if fam == "harmonic":
        if M is None:
            raise ConfigError("harmonic family needs M")
        return truncate_family(PathFamily("harmonic"), None, M)
    if fam == "finite_length":
        if M is None:
            raise ConfigError("finite_length family needs M")
        rule = parse_length_rule(raw["length_rule"]) if "length_rule" in raw else LengthRule()
        sigma = parse_sigma_rule(raw["sigma_rule"]) if "sigma_rule" in raw else None
        g = truncate_family(PathFamily("finite_length", float(raw.get("L", math.pi)), rule), sigma, M)
        conds = list(g.conditions)
        order = g.path_vertices()
        if "left" in raw:
            conds[order[0]] = combine_conditions(conds[order[0]], as_condition(raw["left"]))
        if "right" in raw:
            conds[order[-1]] = combine_conditions(Delta(0.0), as_condition(raw["right"]))
        return g.with_conditions(conds)
    if fam == "explicit":
        lengths = [float(x) for x in raw["lengths"]]
        sigmas = raw.get("sigmas", [0.0] * len(lengths))
        g = build_path_graph(
            lengths,
            sigmas,
            as_condition(raw["left"]) if "left" in raw else None,
            as_condition(raw["right"]) if "right" in raw else Delta(0.0),
        )
        if "potentials" in raw:
            g = g.with_potential([_potential(p, "potentials") for p in raw["potentials"]])
        return g
    # g0_attach
    g0c = raw["g0"]
    lengths = [_number(x, "g0.lengths", positive=True) for x in g0c["lengths"]]
    if g0c["kind"] == "star":
        outer = g0c.get("outer", "delta:0")
        outer = [as_condition(o) for o in outer] if isinstance(outer, list) else as_condition(outer)
        g0 = star_graph(lengths, as_condition(g0c.get("center", "delta:0")), outer)
    else:
        g0 = build_path_graph(lengths, g0c.get("sigmas", [0.0] * len(lengths)))
    if "q" in g0c:
        g0 = g0.with_potential([_potential(g0c["q"], "g0.q")] * len(g0.edges))
    att = raw["attach"]
    edge = _number(att["edge"], "attach.edge", integer=True)
    if not 0 <= edge < len(g0.edges):
        raise ConfigError(f"attach.edge {edge} out of range")
    toward = att.get("toward", "head")
    if toward not in ("head", "tail"):
        raise ConfigError("attach.toward must be head or tail")
    sigma = parse_sigma_rule(raw["sigma_rule"]) if "sigma_rule" in raw else SigmaSequence("explicit", ())
    if M is None:
        M = len(sigma.values) if sigma.kind == "explicit" else None
    if not M:
        raise ConfigError("g0_attach needs M (or an explicit sigma list)")
    pos = _positions(att["positions"], g0.edges[edge].length, M, toward)
    strengths = sigma.take(M)
    if toward == "tail":
        # sigma_1 sits farthest from the accumulation end
        strengths = strengths[::-1]
    return attach_delta_vertices(g0, [(edge, pos, strengths)])
