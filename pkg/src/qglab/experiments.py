"""Truncation and eigencount sweeps with convergence reports, plus named presets."""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import _io
from ._counting import dirichlet_count_exact, harmonic_dirichlet_count, neumann_interval_count
from .config import ConfigError, GraphConfig, check_keys, parse_graph_config
from .graph import Delta, Dirichlet, MetricGraph
from .solver import SolverOptions, exact_harmonic_spectrum, solve
from .spectral_stats import (
    Baseline,
    CountingFunction,
    baseline_graph,
    cesaro_gap_mean,
    cesaro_smoothed,
    harmonic_normalizer,
    heat_bracket_graphs,
    heat_bracketing_check,
    heat_diag,
    local_weyl_mean,
    local_weyl_prediction,
    modified_local_weyl,
    predicted_gap_mean_graph,
    predicted_gap_mean_path,
    richardson_inverse_n,
    weyl_ratio,
)

TAGS = ("T-Weyl", "T-GapFinite", "T-GapDiverge", "L-LocalWeyl", "T-ModifiedWeyl", "T-GenI", "T-GenII", "R-HeatBracket")

# deviations up to this fraction of the tolerance are exempt from the trend check
TREND_FLOOR = 0.5

_PARAMS = {
    "T-Weyl": {"lam_grid", "mode"},
    "T-GapFinite": {"baseline"},
    "T-GenII": {"baseline"},
    "T-GapDiverge": {"baseline", "factor"},
    "T-GenI": {"baseline", "factor"},
    "L-LocalWeyl": {"xs"},
    "T-ModifiedWeyl": {"xs", "standard_max", "count_lam", "count_tol"},
    "R-HeatBracket": {"x", "t_grid", "samples", "seed", "tail_tol"},
}


@dataclass(frozen=True)
class ExperimentPlan:
    """One falsifiable sweep.

    ``N_grid`` is the eigenvalue-count axis except for T-Weyl, where the
    lambda grid lives in ``params["lam_grid"]``. ``M_grid`` lists truncation
    orders (ignored by explicit graphs).
    """

    tag: str
    graph: GraphConfig
    M_grid: tuple[int, ...]
    N_grid: tuple[int, ...]
    tol: float
    params: dict = field(default_factory=dict)
    description: str = ""
    seed: int = 0

    def __post_init__(self):
        if self.tag not in TAGS:
            raise ConfigError(f"unknown theorem tag {self.tag!r}; expected one of {TAGS}")
        for name, grid in (("M_grid", self.M_grid), ("N_grid", self.N_grid)):
            if not grid:
                raise ConfigError(f"{name} must be nonempty")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise ConfigError(f"{name} must increase strictly")
            if any(int(v) != v or v < 1 for v in grid):
                raise ConfigError(f"{name} entries must be positive integers")
        if not self.tol > 0:
            raise ConfigError("tol must be > 0")
        extra = set(self.params) - _PARAMS[self.tag]
        if extra:
            raise ConfigError(f"unknown params {sorted(extra)} for {self.tag}; allowed {sorted(_PARAMS[self.tag])}")


@dataclass(frozen=True)
class ReportRow:
    M: int | None
    N: int | None
    x: float | None
    t: float | None
    lam: float | None
    observed: float
    predicted: float


def _deviation(obs: float, pred: float) -> float:
    if pred == 0:
        return abs(obs)
    if math.isinf(pred):
        return math.inf
    return abs(obs - pred) / abs(pred)


def trend_ok(devs: Sequence[float], tol: float) -> bool:
    """Deviation nonincreasing over the last three points (tiny deviations exempt)."""
    last = list(devs)[-3:]
    return all(b <= a or b <= TREND_FLOOR * tol for a, b in zip(last, last[1:]))


def standard_pass(devs: Sequence[float], tol: float) -> bool:
    devs = list(devs)
    return bool(devs) and devs[-1] <= tol and trend_ok(devs, tol)


@dataclass(frozen=True)
class ConvergenceReport:
    tag: str
    description: str
    prediction: str
    predicted_limit: float
    tolerance: float
    rows: tuple[ReportRow, ...]
    extrapolated: float
    checks: dict
    notes: dict = field(default_factory=dict)

    @property
    def deviations(self) -> list[float]:
        return [_deviation(r.observed, r.predicted) for r in self.rows]

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def csv_text(self) -> str:
        header = ["tag", "M", "N", "x", "t", "lambda", "observed", "predicted", "deviation"]
        rows = [[self.tag, r.M, r.N, r.x, r.t, r.lam, r.observed, r.predicted, d] for r, d in zip(self.rows, self.deviations)]
        return _io.csv_text(header, rows)

    def summary(self) -> dict:
        return {
            "tag": self.tag,
            "description": self.description,
            "prediction": self.prediction,
            "predicted_limit": self.predicted_limit,
            "tolerance": self.tolerance,
            "extrapolated": self.extrapolated,
            "checks": dict(self.checks),
            "passed": self.passed,
            "final_observed": self.rows[-1].observed if self.rows else None,
            "final_predicted": self.rows[-1].predicted if self.rows else None,
            "final_deviation": self.deviations[-1] if self.rows else None,
            "n_rows": len(self.rows),
            "notes": self.notes,
        }

    def json_text(self) -> str:
        return _io.dumps(self.summary())

    def write(self, out_dir: Path) -> None:
        out_dir = Path(out_dir)
        _io.write_atomic({out_dir / "report.csv": self.csv_text(), out_dir / "report.json": self.json_text()})


# -- helpers ----------------------------------------------------------------


def _zero_coupling(g: MetricGraph) -> MetricGraph:
    """Same graph with every delta strength set to zero (Dirichlet kept)."""
    return g.with_conditions([c if isinstance(c, Dirichlet) else Delta(0.0) for c in g.conditions])


def coupling_prediction(g: MetricGraph) -> float:
    """(int q + sum_v 2 sigma_v / deg v) / total length: gap-mean limit against zero couplings and q = 0."""
    total = g.potential_integral
    for v, c in enumerate(g.conditions):
        if isinstance(c, Delta):
            total += 2 * c.strength / g.degree(v)
    return total / g.total_length


def _baseline(plan: ExperimentPlan) -> Baseline | None:
    if plan.graph.family != "g0_attach":
        return None
    b = plan.params.get("baseline", "0,0,0")
    try:
        return Baseline(b)
    except ValueError:
        raise ConfigError(f"baseline must be one of {[x.value for x in Baseline]}, got {b!r}") from None


def _pair(plan: ExperimentPlan, M: int):
    """Truncated graph, its comparison graph and the truncated prediction."""
    g = plan.graph.build(M)
    bl = _baseline(plan)
    if bl is None:
        return g, _zero_coupling(g), coupling_prediction(g) - g.potential_integral / g.total_length
    return g, baseline_graph(g, bl), predicted_gap_mean_graph(g, bl)


def _limit(plan: ExperimentPlan, M: int) -> float:
    sigma = plan.graph.sigma
    bl = _baseline(plan)
    if bl is None:
        if plan.graph.family == "finite_length" and sigma is not None:
            return predicted_gap_mean_path(sigma, plan.graph.L)
        g = plan.graph.build(M)
        return coupling_prediction(g) - g.potential_integral / g.total_length
    tail = 0.0 if sigma is None else sigma.tail_sum(M + 1)
    return predicted_gap_mean_graph(plan.graph.build(M), bl, tail)


def _gap_sweep(plan: ExperimentPlan):
    Nmax = max(plan.N_grid)
    opts = SolverOptions(n_target=Nmax, eigenfunctions=False)
    out = []
    for M in plan.M_grid:
        g, g0, pred = _pair(plan, M)
        a, b = solve(g, opts), solve(g0, opts)
        sm = [cesaro_smoothed(a, b, N) for N in plan.N_grid]
        raw = [cesaro_gap_mean(a, b, N) for N in plan.N_grid]
        out.append((M, pred, sm, raw))
    return out


def _extrapolate(N_grid, values) -> float:
    if len(N_grid) < 2:
        return float(values[-1])
    return richardson_inverse_n(N_grid[-2], values[-2], N_grid[-1], values[-1])


# -- runners ----------------------------------------------------------------


def run_gap_experiment(plan: ExperimentPlan) -> ConvergenceReport:
    """Smoothed Cesaro gap means over (M, N) against the predicted limit."""
    sweep = _gap_sweep(plan)
    rows = [ReportRow(M, N, None, None, None, s, pred) for M, pred, sm, _ in sweep for N, s in zip(plan.N_grid, sm)]
    M_last, pred_last, sm_last, raw_last = sweep[-1]
    devs_last = [_deviation(s, pred_last) for s in sm_last]
    limit = _limit(plan, M_last)
    checks = {
        "final_within_tol": devs_last[-1] <= plan.tol,
        "trend": trend_ok(devs_last, plan.tol),
        "limit_within_tol": _deviation(sm_last[-1], limit) <= plan.tol,
    }
    notes = {"raw_means_last_M": raw_last, "baseline": (_baseline(plan) or Baseline.ZERO).value}
    return ConvergenceReport(
        plan.tag,
        plan.description,
        "(int q + sum_v 2 gamma_v/deg v + sum sigma)/total length, terms kept by the baseline removed",
        limit,
        plan.tol,
        tuple(rows),
        _extrapolate(plan.N_grid, sm_last),
        checks,
        notes,
    )


def run_divergence_probe(plan: ExperimentPlan) -> ConvergenceReport:
    """Growth of the gap mean with the truncation order for a non-summable sigma."""
    sweep = _gap_sweep(plan)
    factor = float(plan.params.get("factor", 3.0))
    rows = [ReportRow(M, plan.N_grid[-1], None, None, None, sm[-1], pred) for M, pred, sm, _ in sweep]
    obs = [r.observed for r in rows]
    extr = [_extrapolate(plan.N_grid, sm) for _, _, sm, _ in sweep]
    devs = [_deviation(r.observed, r.predicted) for r in rows]
    checks = {
        "increasing_in_M": all(b > a for a, b in zip(obs, obs[1:])),
        "within_tol_of_partial_sums": all(d <= plan.tol for d in devs),
        "crosses_threshold": obs[-1] >= factor * obs[0],
    }
    notes = {
        "factor": factor,
        "growth_ratio": obs[-1] / obs[0],
        "extrapolated_by_M": extr,
        "extrapolated_nondecreasing": all(b >= a for a, b in zip(extr, extr[1:])),
    }
    return ConvergenceReport(
        plan.tag,
        plan.description,
        "partial sums (2 sigma_1 + sum_{2<=n<=M} sigma_n)/L (path) or truncated baseline formula (graph); limit +inf",
        math.inf,
        plan.tol,
        tuple(rows),
        extr[-1],
        checks,
        notes,
    )


def run_weyl_experiment(plan: ExperimentPlan) -> ConvergenceReport:
    """N(lambda)/sqrt(lambda) on a lambda grid, or the harmonic count against its normalizer."""
    lam_grid = [float(v) for v in plan.params.get("lam_grid", [1e2, 1e3, 1e4, 1e5, 1e6])]
    mode = plan.params.get("mode", "path")
    rows = []
    checks = {}
    if mode == "harmonic":
        M = plan.M_grid[-1] if plan.graph.family == "harmonic" and plan.graph.M else None
        for lam in lam_grid:
            n = harmonic_dirichlet_count(lam, M)
            rows.append(ReportRow(M, n, None, None, lam, n / float(harmonic_normalizer(lam)), 1.0))
        prediction = "N(lambda) / ((sqrt(lambda)/2) ln lambda) -> 1"
        limit = 1.0
    elif mode == "path":
        bracket = True
        for M in plan.M_grid:
            g = plan.graph.build(M)
            spec = solve(g, SolverOptions(lam_max=max(lam_grid), eigenfunctions=False))
            count = CountingFunction.from_spectrum(spec)
            L = g.total_length
            for lam in lam_grid:
                r = weyl_ratio(count, lam)
                lo = dirichlet_count_exact(g.lengths, max(lam * (1 - 1e-12) - g.max_potential, 0.0)) / math.sqrt(lam)
                hi = neumann_interval_count(L, lam) / math.sqrt(lam)
                bracket &= lo <= r <= hi
                rows.append(ReportRow(M, count(lam), None, None, lam, r, L / math.pi))
        checks["bracketing"] = bracket
        prediction = "N(lambda)/sqrt(lambda) -> total length / pi"
        limit = rows[-1].predicted
    else:
        raise ConfigError(f"Weyl mode must be path or harmonic, got {mode!r}")
    last = [r for r in rows if r.M == rows[-1].M]
    devs = [_deviation(r.observed, r.predicted) for r in last]
    checks["final_within_tol"] = devs[-1] <= plan.tol
    checks["trend"] = trend_ok(devs, plan.tol)
    return ConvergenceReport(plan.tag, plan.description, prediction, limit, plan.tol, tuple(rows), rows[-1].observed, checks)


def _harmonic_cells_for(N: int) -> int:
    """Smallest number of harmonic cells whose first N eigenvalues are those of the full path."""
    lo, hi = 1, N
    while lo < hi:
        m = (lo + hi) // 2
        if harmonic_dirichlet_count(m * m) >= N:
            hi = m
        else:
            lo = m + 1
    return lo


def run_local_weyl_experiment(plan: ExperimentPlan) -> ConvergenceReport:
    """(1/N) sum |f_n(x)|^2 against 2/(L deg x), or the modified harmonic-path version."""
    Nmax = max(plan.N_grid)
    rows = []
    checks = {}
    notes = {}
    if plan.tag == "T-ModifiedWeyl":
        cells = _harmonic_cells_for(Nmax)
        spec = exact_harmonic_spectrum(cells, Nmax)
        g = spec.graph
        xs = plan.params.get("xs", [math.pi / 2, math.pi + math.pi / 4, math.pi * 1.7])
        std_max = float(plan.params.get("standard_max", 0.05))
        vertex_zero = True
        std_small = True
        per_x_pass = []
        for x in xs:
            at_vertex = g.vertex_at(g.locate(x)) is not None
            xr = [ReportRow(cells, N, float(x), None, None, modified_local_weyl(spec, x, N), 0.0 if at_vertex else 1 / math.pi) for N in plan.N_grid]
            rows += xr
            if at_vertex:
                vertex_zero &= all(r.observed == 0.0 for r in xr)
            else:
                per_x_pass.append(standard_pass([_deviation(r.observed, r.predicted) for r in xr], plan.tol))
                std = local_weyl_mean(spec, x, Nmax)
                notes[f"standard_mean_x={x:.6g}"] = std
                std_small &= std <= std_max
        checks["non_vertex_within_tol"] = all(per_x_pass)
        checks["vertex_zero"] = vertex_zero
        checks["standard_mean_small"] = std_small
        notes["cells"] = cells
        notes["truncation_exact"] = spec.meta["exact"]
        if "count_lam" in plan.params:
            lam = float(plan.params["count_lam"])
            ratio = harmonic_dirichlet_count(lam) / float(harmonic_normalizer(lam))
            notes["count_ratio"] = ratio
            checks["harmonic_count"] = abs(ratio - 1) <= float(plan.params.get("count_tol", 0.05))
        prediction = "(1/sqrt(lambda(N))) sum |f_n(x)|^2 -> 1/pi off vertices, 0 at vertices"
        limit = 1 / math.pi
        extrap = rows[-1].observed
    else:
        per_x_pass = []
        for M in plan.M_grid:
            g = plan.graph.build(M)
            spec = solve(g, SolverOptions(n_target=Nmax))
            xs = plan.params.get("xs", [0.0, g.total_length / 3])
            for x in xs:
                pred = local_weyl_prediction(g, x)
                xr = [ReportRow(M, N, float(x), None, None, local_weyl_mean(spec, x, N, smooth=True), pred) for N in plan.N_grid]
                rows += xr
                if M == plan.M_grid[-1]:
                    per_x_pass.append(standard_pass([_deviation(r.observed, r.predicted) for r in xr], plan.tol))
        checks["all_x_within_tol"] = all(per_x_pass)
        prediction = "(1/N) sum |f_n(x)|^2 -> 2/(total length * deg x)"
        limit = rows[-1].predicted
        extrap = _extrapolate(plan.N_grid, [r.observed for r in rows[-len(plan.N_grid):]])
    return ConvergenceReport(plan.tag, plan.description, prediction, limit, plan.tol, tuple(rows), extrap, checks, notes)


def run_heat_experiment(plan: ExperimentPlan) -> ConvergenceReport:
    """Short-time diagonal sqrt(4 pi t) p(t;x,x) -> 2/deg x, and the bracketing chain at random (t, x)."""
    g = plan.graph.build(plan.M_grid[-1])
    N = plan.N_grid[-1]
    L = g.total_length
    scale = (L / math.pi) ** 2
    opts = SolverOptions(n_target=N)
    spec = solve(g, opts)
    x = float(plan.params.get("x", 0.6 * L))
    t_grid = [float(t) for t in plan.params.get("t_grid", [1e-2, 1e-3, 1e-4])]
    tail_tol = float(plan.params.get("tail_tol", 1e-10))
    pred = 2.0 / g.point_degree(g.locate(x))
    rows = []
    tails = []
    for t in t_grid:
        est = heat_diag(spec, t * scale, x, tail_tol)
        tails.append(est.tail_bound)
        rows.append(ReportRow(plan.M_grid[-1], N, x, t * scale, None, math.sqrt(4 * math.pi * t * scale) * est.value, pred))
    devs = [_deviation(r.observed, r.predicted) for r in rows]
    rng = np.random.default_rng(int(plan.params.get("seed", plan.seed)))
    samples = int(plan.params.get("samples", 20))
    held = []
    points = []
    for _ in range(samples):
        ts = scale * 10 ** rng.uniform(-3, 0)
        xs = float(rng.uniform(0, L))
        points.append([float(ts), xs])
        lo, hi = heat_bracket_graphs(g, xs)
        held.append(heat_bracketing_check(spec, solve(hi, opts), solve(lo, opts), ts, xs, tail_tol))
    checks = {
        "final_within_tol": devs[-1] <= plan.tol,
        "trend": trend_ok(devs, plan.tol),
        "bracketing_all_samples": all(held),
    }
    notes = {"tail_bounds": tails, "bracketing_held": int(sum(held)), "samples": samples, "sample_points": points}
    return ConvergenceReport(
        plan.tag,
        plan.description,
        "sqrt(4 pi t) p(t;x,x) -> 2/deg x as t -> 0; p_lower <= p <= p_zero",
        pred,
        plan.tol,
        tuple(rows),
        rows[-1].observed,
        checks,
        notes,
    )


RUNNERS: dict[str, Callable[[ExperimentPlan], ConvergenceReport]] = {
    "T-Weyl": run_weyl_experiment,
    "T-GapFinite": run_gap_experiment,
    "T-GenII": run_gap_experiment,
    "T-GapDiverge": run_divergence_probe,
    "T-GenI": run_divergence_probe,
    "L-LocalWeyl": run_local_weyl_experiment,
    "T-ModifiedWeyl": run_local_weyl_experiment,
    "R-HeatBracket": run_heat_experiment,
}


def run_plan(plan: ExperimentPlan) -> ConvergenceReport:
    return RUNNERS[plan.tag](plan)


# -- presets ----------------------------------------------------------------

_PI = math.pi
_GEOM = {"kind": "geometric", "ratio": 0.5}
_STAR_GII = {
    "family": "g0_attach",
    "g0": {"kind": "star", "lengths": [1.0, 1.0, 1.0], "center": "delta:1", "outer": "delta:0"},
    "attach": {"edge": 0, "positions": {"kind": "geometric", "ratio": 0.5}, "toward": "head"},
    "sigma_rule": {"kind": "explicit", "values": [0.5, 0.25, 0.125, 0.0625, 0.03125, 0.03125]},
}
_STAR_GI = {
    "family": "g0_attach",
    "g0": {"kind": "star", "lengths": [1.0, 1.0, 1.0], "center": "delta:1", "outer": "delta:0"},
    "attach": {"edge": 0, "positions": {"kind": "harmonic"}, "toward": "head"},
    "sigma_rule": {"kind": "harmonic"},
}

PRESETS: dict[str, dict] = {
    "t-weyl-interval": {
        "tag": "T-Weyl",
        "description": "Neumann interval of length pi: N(lambda)/sqrt(lambda) -> 1 on a lambda grid up to 1e6",
        "graph": {"family": "explicit", "lengths": [_PI], "sigmas": [0.0, 0.0]},
        "M_grid": [1],
        "N_grid": [1],
        "tol": 0.002,
        "params": {"lam_grid": [1e2, 1e3, 1e4, 1e5, 1e6]},
    },
    "t-gap-finite-path": {
        "tag": "T-GapFinite",
        "description": "Path of length pi, sigma = (1, 0, 0, ...): smoothed gap mean -> 2/pi",
        "graph": {"family": "finite_length", "L": _PI, "length_rule": _GEOM, "sigma_rule": {"kind": "explicit", "values": [1.0]}},
        "M_grid": [1, 2, 4],
        "N_grid": [500, 1000, 2000],
        "tol": 0.05,
    },
    "t-gap-diverge": {
        "tag": "T-GapDiverge",
        "description": "sigma_n = 1/n on lengths 6L/(pi n)^2: gap mean follows the divergent partial sums",
        "graph": {"family": "finite_length", "L": _PI, "length_rule": {"kind": "inverse_square"}, "sigma_rule": {"kind": "harmonic"}},
        "M_grid": [1, 2, 4, 8, 16, 32, 64, 128],
        "N_grid": [1000, 2000],
        "tol": 0.1,
        "params": {"factor": 3.0},
    },
    "l-local-weyl": {
        "tag": "L-LocalWeyl",
        "description": "Path of length pi with three deltas: (1/N) sum |f_n(x)|^2 -> 2/(L deg x)",
        "graph": {"family": "finite_length", "L": _PI, "length_rule": _GEOM, "sigma_rule": {"kind": "explicit", "values": [1.0, 0.5, 2.0]}},
        "M_grid": [3],
        "N_grid": [500, 1000, 2000],
        "tol": 0.1,
        "params": {"xs": [0.0, 1.0, 2.0, 2.9]},
    },
    "t-modified-weyl": {
        "tag": "T-ModifiedWeyl",
        "description": "Harmonic Dirichlet path, exact cell eigendata: modified local mean -> 1/pi, count ~ (sqrt(lambda)/2) ln lambda",
        "graph": {"family": "harmonic", "M": 10},
        "M_grid": [1],
        "N_grid": [1000, 3000, 10000],
        "tol": 0.1,
        "params": {"xs": [_PI / 2, 1.25 * _PI, 1.7 * _PI, _PI], "count_lam": 1e8},
    },
    "t-gen-i": {
        "tag": "T-GenI",
        "description": "3-star, center gamma = 1, sigma_n = 1/n accumulating at an outer standard vertex: mean grows without bound",
        "graph": _STAR_GI,
        "M_grid": [1, 2, 4, 8, 16],
        "N_grid": [750, 1500],
        "tol": 0.1,
        "params": {"baseline": "q,gamma,0", "factor": 3.0},
    },
    "t-gen-ii": {
        "tag": "T-GenII",
        "description": "3-star, center gamma = 1, attached sigma summing to 1: mean against (0,0,0) -> 5/9",
        "graph": _STAR_GII,
        "M_grid": [2, 4, 6],
        "N_grid": [375, 750, 1500],
        "tol": 0.1,
        "params": {"baseline": "0,0,0"},
    },
    "r-heat-bracket": {
        "tag": "R-HeatBracket",
        "description": "Path of length pi with deltas: sqrt(4 pi t) p(t;x,x) -> 1 and the Dirichlet/zero-coupling bracketing chain",
        "graph": {"family": "finite_length", "L": _PI, "length_rule": _GEOM, "sigma_rule": {"kind": "geometric", "scale": 1.0, "ratio": 0.5}},
        "M_grid": [5],
        "N_grid": [2000],
        "tol": 0.02,
        "params": {"x": 2.0, "t_grid": [1e-2, 1e-3, 1e-4], "samples": 20, "seed": 7},
    },
}

_PLAN_KEYS = {"preset", "tag", "description", "graph", "M_grid", "N_grid", "tol", "params", "seed"}


def parse_plan(obj, overrides: dict | None = None) -> ExperimentPlan:
    """ExperimentPlan from a JSON object, optionally starting from ``"preset"``."""
    check_keys(obj, _PLAN_KEYS, "experiment")
    base: dict = {}
    if "preset" in obj:
        name = obj["preset"]
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}; see the presets subcommand")
        base = dict(PRESETS[name])
    merged = {**base, **{k: v for k, v in obj.items() if k != "preset"}}
    if overrides:
        merged.update({k: v for k, v in overrides.items() if v is not None})
    for key in ("tag", "graph", "M_grid", "N_grid", "tol"):
        if key not in merged:
            raise ConfigError(f"experiment: missing key {key!r}")
    params = merged.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("params must be an object")
    try:
        return ExperimentPlan(
            tag=merged["tag"],
            graph=parse_graph_config(merged["graph"]),
            M_grid=tuple(merged["M_grid"]),
            N_grid=tuple(merged["N_grid"]),
            tol=float(merged["tol"]),
            params=dict(params),
            description=str(merged.get("description", "")),
            seed=int(merged.get("seed", 0)),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"experiment: {exc}") from None


def preset_plan(name: str) -> ExperimentPlan:
    return parse_plan({"preset": name})


def list_presets() -> list[tuple[str, str, str]]:
    """(name, tag, description) for every preset."""
    return [(k, v["tag"], v["description"]) for k, v in PRESETS.items()]


def with_overrides(plan: ExperimentPlan, tol: float | None = None, N: int | None = None, seed: int | None = None) -> ExperimentPlan:
    """Command-line overrides: tolerance, largest N (grid clipped below it), seed."""
    if tol is not None:
        plan = replace(plan, tol=float(tol))
    if N is not None:
        grid = tuple(n for n in plan.N_grid if n < N) + (int(N),)
        plan = replace(plan, N_grid=grid)
    if seed is not None:
        params = dict(plan.params)
        if "seed" in _PARAMS[plan.tag]:
            params["seed"] = int(seed)
        plan = replace(plan, seed=int(seed), params=params)
    return plan
