"""Spectral functionals: counting functions, gap means, local Weyl sums, heat kernels."""

from __future__ import annotations

import enum
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

from ._counting import dirichlet_count_exact, harmonic_dirichlet_count, neumann_interval_count
from .graph import Delta, Dirichlet, GraphPoint, MetricGraph, SigmaSequence
from .solver.spectrum import Spectrum

__all__ = [
    "Baseline",
    "CountingFunction",
    "GapMeanReport",
    "HeatDiagEstimate",
    "InsufficientSpectrumError",
    "ModifiedNormalizer",
    "UniformBoundReport",
    "baseline_graph",
    "cesaro_gap_mean",
    "cesaro_smoothed",
    "dirichlet_count_exact",
    "gap_mean_report",
    "harmonic_dirichlet_count",
    "harmonic_normalizer",
    "heat_bracket_graphs",
    "heat_bracketing_check",
    "heat_diag",
    "karamata_deviation",
    "local_weyl_mean",
    "local_weyl_prediction",
    "modified_local_weyl",
    "modified_normalizer",
    "neumann_interval_count",
    "predicted_gap_mean_general",
    "predicted_gap_mean_graph",
    "predicted_gap_mean_path",
    "richardson_inverse_n",
    "smoothed_mean",
    "uniform_bound_check",
    "weyl_ratio",
]


class InsufficientSpectrumError(ValueError):
    """Fewer eigenvalues than a statistic needs."""


# -- counting ---------------------------------------------------------------


@dataclass
class CountingFunction:
    """lambda -> #{n : lambda_n <= lambda} from a spectrum or a closed formula."""

    func: Callable[[float], int]
    label: str = ""
    _cache: dict = field(default_factory=dict, repr=False)

    def __call__(self, lam: float) -> int:
        lam = float(lam)
        if lam not in self._cache:
            self._cache[lam] = int(self.func(lam))
        return self._cache[lam]

    @classmethod
    def from_spectrum(cls, spec: Spectrum) -> "CountingFunction":
        top = spec.eigenvalues[-1] if len(spec) else -math.inf

        def count(lam):
            # beyond the computed range the count would silently saturate
            if lam > top and not spec.meta.get("complete_to", -math.inf) >= lam:
                raise InsufficientSpectrumError(f"spectrum ends at {top}, cannot count up to {lam}")
            return int(spec.counting(lam))

        return cls(count, f"spectrum[{spec.method}]")

    @classmethod
    def dirichlet(cls, lengths: Sequence[float]) -> "CountingFunction":
        return cls(lambda lam: dirichlet_count_exact(lengths, lam), "dirichlet")

    @classmethod
    def neumann_interval(cls, L: float) -> "CountingFunction":
        return cls(lambda lam: neumann_interval_count(L, lam), "neumann")

    @classmethod
    def harmonic(cls, M: int | None = None) -> "CountingFunction":
        return cls(lambda lam: harmonic_dirichlet_count(lam, M), "harmonic")


def weyl_ratio(counting: CountingFunction, lam: float) -> float:
    """N(lambda) / sqrt(lambda); tends to total length / pi."""
    if not lam > 0:
        raise ValueError("lambda must be > 0")
    return counting(lam) / math.sqrt(lam)


def harmonic_normalizer(lam) -> np.ndarray:
    """(sqrt(lambda) / 2) ln(lambda), the growth of the harmonic-path count."""
    lam = np.asarray(lam, dtype=float)
    return 0.5 * np.sqrt(lam) * np.log(lam)


# -- Cesaro means -----------------------------------------------------------


def _need(spec: Spectrum, N: int) -> None:
    if len(spec) < N:
        raise InsufficientSpectrumError(f"need {N} eigenvalues, spectrum has {len(spec)}")


def cesaro_gap_mean(spec_a: Spectrum, spec_b: Spectrum, N: int) -> float:
    """(1/N) sum_{n <= N} (lambda_n(A) - lambda_n(B))."""
    _need(spec_a, N)
    _need(spec_b, N)
    d = spec_a.eigenvalues[:N] - spec_b.eigenvalues[:N]
    return math.fsum(d) / N


def smoothed_mean(terms: np.ndarray, N: int) -> float:
    """Average of the partial means (1/n) sum_{m<=n} terms_m over n in [N/2, N]."""
    terms = np.asarray(terms, dtype=float)
    if len(terms) < N:
        raise InsufficientSpectrumError(f"need {N} terms, got {len(terms)}")
    partial = np.cumsum(terms[:N]) / np.arange(1, N + 1)
    lo = max(N // 2, 1)
    return float(partial[lo - 1:].mean())


def cesaro_smoothed(spec_a: Spectrum, spec_b: Spectrum, N: int) -> float:
    """Cesaro gap mean averaged once more over the dyadic window [N/2, N]."""
    _need(spec_a, N)
    _need(spec_b, N)
    return smoothed_mean(spec_a.eigenvalues[:N] - spec_b.eigenvalues[:N], N)


def richardson_inverse_n(n1: float, s1: float, n2: float, s2: float) -> float:
    """Limit of s(N) = a + b/N through two points."""
    if n1 == n2:
        raise ValueError("need two distinct N")
    return (n2 * s2 - n1 * s1) / (n2 - n1)


@dataclass(frozen=True)
class GapMeanReport:
    """Cesaro gap means along an N grid for one truncation order."""

    N_grid: tuple[int, ...]
    raw: tuple[float, ...]
    smoothed: tuple[float, ...]
    predicted: float
    M: int | None
    extrapolated: float
    error_bar: float

    def __post_init__(self):
        if not len(self.N_grid) == len(self.raw) == len(self.smoothed):
            raise ValueError("grid and value lengths differ")


def gap_mean_report(spec_a: Spectrum, spec_b: Spectrum, N_grid: Sequence[int], predicted: float, M: int | None = None) -> GapMeanReport:
    """Raw and smoothed means on ``N_grid`` plus a 1/N extrapolation of the smoothed series."""
    N_grid = tuple(int(n) for n in N_grid)
    if not N_grid or any(b <= a for a, b in zip(N_grid, N_grid[1:])):
        raise ValueError("N grid must be nonempty and increasing")
    raw = tuple(cesaro_gap_mean(spec_a, spec_b, n) for n in N_grid)
    sm = tuple(cesaro_smoothed(spec_a, spec_b, n) for n in N_grid)
    if len(N_grid) >= 2:
        ext = richardson_inverse_n(N_grid[-2], sm[-2], N_grid[-1], sm[-1])
    else:
        ext = sm[-1]
    return GapMeanReport(N_grid, raw, sm, float(predicted), M, float(ext), float(abs(ext - sm[-1])))


# -- predicted limits -------------------------------------------------------


def predicted_gap_mean_path(sigma: SigmaSequence, L: float) -> float:
    """2 sigma_1 / L + (sum_{n>=2} sigma_n) / L, or +inf outside l^1."""
    if not sigma.is_l1:
        return math.inf
    s1 = float(sigma.take(1)[0])
    return (2 * s1 + sigma.tail_sum(2)) / L


class Baseline(enum.Enum):
    """Comparison operator for the gap mean on a decorated graph: which of (q, gamma, sigma) it keeps."""

    Q_GAMMA = "q,gamma,0"
    GAMMA = "0,gamma,0"
    ZERO = "0,0,0"
    Q = "q,0,0"


def _sigma_total(sigma) -> float:
    if isinstance(sigma, SigmaSequence):
        return sigma.tail_sum(1)
    if np.ndim(sigma) == 0:
        return float(sigma)
    return math.fsum(float(s) for s in sigma)


def predicted_gap_mean_general(
    q_integral: float,
    gamma: Sequence[tuple[float, int]],
    sigma,
    total_length: float,
    baseline: Baseline,
) -> float:
    """Limit of the gap mean between (q, gamma, sigma) and a baseline.

    ``gamma`` lists (gamma_v, deg v) over the base vertices, ``sigma`` the
    attached strengths (sequence, total, or SigmaSequence).
    """
    s = _sigma_total(sigma)
    if math.isinf(s):
        return math.inf
    g_term = 2 * math.fsum(gv / dv for gv, dv in gamma)
    if baseline is Baseline.Q_GAMMA:
        num = s
    elif baseline is Baseline.GAMMA:
        num = q_integral + s
    elif baseline is Baseline.ZERO:
        num = q_integral + g_term + s
    elif baseline is Baseline.Q:
        num = g_term + s
    else:
        raise ValueError(f"unknown baseline {baseline!r}")
    return num / total_length


def _base_gamma(g: MetricGraph) -> list[tuple[float, int]]:
    out = []
    for v, vert in enumerate(g.vertices):
        if vert.attached:
            continue
        if isinstance(vert.condition, Dirichlet):
            raise ValueError(f"base vertex {v} is Dirichlet; gamma must be finite")
        out.append((vert.condition.strength, g.degree(v)))
    return out


def predicted_gap_mean_graph(g: MetricGraph, baseline: Baseline, sigma_tail: float = 0.0) -> float:
    """Predicted limit read off a decorated graph (attached vertices carry sigma).

    ``sigma_tail`` adds the strengths cut off by truncation.
    """
    sig = math.fsum(v.condition.strength for v in g.vertices if v.attached) + sigma_tail
    return predicted_gap_mean_general(g.potential_integral, _base_gamma(g), sig, g.total_length, baseline)


def baseline_graph(g: MetricGraph, baseline: Baseline) -> MetricGraph:
    """The comparison graph: attached couplings removed, q and gamma kept or dropped."""
    conds = []
    for vert in g.vertices:
        c = vert.condition
        if vert.attached:
            c = Delta(0.0)
        elif baseline in (Baseline.ZERO, Baseline.Q) and isinstance(c, Delta):
            c = Delta(0.0)
        conds.append(c)
    out = g.with_conditions(conds)
    if baseline in (Baseline.GAMMA, Baseline.ZERO):
        out = out.without_potential()
    return out


# -- local Weyl -------------------------------------------------------------


def _point_degree(g: MetricGraph, x) -> int:
    return g.point_degree(g.locate(x))


def local_weyl_prediction(g: MetricGraph, x) -> float:
    """2 / (total length * deg(x)); path ends have degree 1."""
    return 2.0 / (g.total_length * _point_degree(g, x))


def local_weyl_mean(spec: Spectrum, x, N: int, smooth: bool = False) -> float:
    """(1/N) sum_{n <= N} |f_n(x)|^2, optionally window-smoothed."""
    _need(spec, N)
    v = spec.values_at(x, N) ** 2
    return smoothed_mean(v, N) if smooth else float(v.sum() / N)


@dataclass(frozen=True)
class UniformBoundReport:
    max_value: float
    argmax_x: object
    argmax_N: int
    reference: float
    factor: float
    passed: bool


def uniform_bound_check(spec: Spectrum, xs: Sequence, Ns: Sequence[int], factor: float = 10.0) -> UniformBoundReport:
    """Largest (1/N) sum |f_n(x)|^2 over the grid against factor * 2 / (shortest edge)."""
    Ns = [int(n) for n in Ns]
    _need(spec, max(Ns))
    nmax = max(Ns)
    best = (-math.inf, None, 0)
    idx = np.array(Ns) - 1
    for x in xs:
        partial = np.cumsum(spec.values_at(x, nmax) ** 2) / np.arange(1, nmax + 1)
        vals = partial[idx]
        j = int(np.argmax(vals))
        if vals[j] > best[0]:
            best = (float(vals[j]), x, Ns[j])
    ref = 2.0 / float(spec.graph.lengths.min())
    return UniformBoundReport(best[0], best[1], best[2], ref, factor, bool(best[0] <= factor * ref))


def karamata_deviation(spec: Spectrum, N: int) -> float:
    """|lambda_N (pi / total length)^-2 N^-2 - 1|."""
    _need(spec, N)
    L = spec.graph.total_length
    return abs(spec.eigenvalues[N - 1] * (L / math.pi) ** 2 / N**2 - 1)


# -- heat kernel ------------------------------------------------------------


@dataclass(frozen=True)
class HeatDiagEstimate:
    """Truncated eigenexpansion of p(t; x, x) with a bound on the omitted tail."""

    t: float
    x: object
    value: float
    n_terms: int
    tail_bound: float

    @property
    def upper(self) -> float:
        return self.value + self.tail_bound


def _cells_at(g: MetricGraph, p: GraphPoint) -> list[tuple[float, float]]:
    """Constant-potential cells whose closure contains p (one or two per edge)."""
    v = g.vertex_at(p)
    out = []
    if v is not None:
        for e_id, side in g.incident(v):
            e = g.edges[e_id]
            cells = e.potential.cells(e.length)
            out.append(cells[0] if side == 0 else cells[-1])
        return out
    e = g.edges[p.edge]
    start = 0.0
    for ell, q in e.potential.cells(e.length):
        if start <= p.t <= start + ell:
            out.append((ell, q))
        start += ell
    return out


def _amplitude_bound(cells: list[tuple[float, float]], lam_min: float) -> float:
    """Bound on |f(x)|^2 for normalized eigenfunctions with eigenvalue >= lam_min.

    On a cell of length l where f = R sin(kappa t + theta), the cell carries at
    least R^2 (l/2 - 1/(2 kappa)) of the unit mass, while |f(x)| <= R.
    """
    best = math.inf
    for ell, q in cells:
        k2 = lam_min - q
        if k2 <= 0:
            continue
        denom = ell / 2 - 1 / (2 * math.sqrt(k2))
        if denom > 0:
            best = min(best, 1.0 / denom)
    return best


def heat_diag(spec: Spectrum, t: float, x, tail_tol: float = 1e-10) -> HeatDiagEstimate:
    """p(t; x, x) = sum_n exp(-t lambda_n) |f_n(x)|^2 with a certified tail bound.

    Beyond the computed spectrum lambda_n >= ((n - |V|) pi / total length)^2, and
    |f_n(x)|^2 is bounded through the amplitude on the cell containing x; the
    Gaussian sum is dominated by an erfc integral.
    """
    if not t > 0:
        raise ValueError("t must be > 0")
    g = spec.graph
    p = g.locate(x)
    v = g.vertex_at(p)
    if v is not None and isinstance(g.vertices[v].condition, Dirichlet):
        return HeatDiagEstimate(t, x, 0.0, len(spec), 0.0)
    N = len(spec)
    vals = spec.values_at(x, N) ** 2
    value = math.fsum(np.exp(-t * spec.eigenvalues) * vals)
    nv = len(g.vertices)
    a = math.pi / g.total_length
    # Dirichlet segments of an interior-Dirichlet graph change nothing here: the bracket is global
    lam_next = max(float(spec.eigenvalues[-1]), ((N + 1 - nv) * a) ** 2 if N + 1 > nv else 0.0)
    B = _amplitude_bound(_cells_at(g, p), lam_next)
    if N <= nv or not math.isfinite(B):
        tail = math.inf
    else:
        st = a * math.sqrt(t)
        tail = B * math.sqrt(math.pi) / (2 * st) * float(erfc(st * (N - nv)))
    if not tail <= tail_tol:
        raise InsufficientSpectrumError(
            f"tail bound {tail:.3e} exceeds {tail_tol:.1e} at t={t}; compute more than {N} eigenvalues"
        )
    return HeatDiagEstimate(t, x, value, N, tail)


def heat_bracket_graphs(g: MetricGraph, x) -> tuple[MetricGraph, MetricGraph]:
    """(lower, upper) comparison graphs for the heat kernel at x.

    lower: every vertex Dirichlet except the one nearest to x, which keeps
    its coupling; upper: all couplings and the potential set to zero.
    """
    p = g.locate(x)
    e = g.edges[p.edge]
    nearest = e.tail if p.t <= e.length - p.t else e.head
    v = g.vertex_at(p)
    if v is not None:
        nearest = v
    lower = g.with_conditions([c if i == nearest else Dirichlet() for i, c in enumerate(g.conditions)])
    upper = g.with_conditions([Delta(0.0)] * len(g.vertices)).without_potential()
    return lower, upper


def heat_bracketing_check(
    spec_sigma: Spectrum, spec_zero: Spectrum, spec_dir: Spectrum, t: float, x, tail_tol: float = 1e-10
) -> bool:
    """p_lower <= p_sigma <= p_zero, each side allowing for the certified tails."""
    lo = heat_diag(spec_dir, t, x, tail_tol)
    mid = heat_diag(spec_sigma, t, x, tail_tol)
    hi = heat_diag(spec_zero, t, x, tail_tol)
    slack = 1e-12 * max(1.0, hi.value)
    return bool(lo.value <= mid.upper + slack and mid.value <= hi.upper + slack)


# -- modified normalizer (harmonic path) -------------------------------------


def _relation(lam):
    return 0.5 * np.sqrt(lam) * np.log(lam)


def modified_normalizer(N) -> float | np.ndarray:
    """The lambda >= e^2 solving (sqrt(lambda) / 2) ln(lambda) = N.

    In s = sqrt(lambda) the relation reads s ln s = N, solved by Newton
    safeguarded by the bracket [e, max(N, e)].
    """
    arr = np.atleast_1d(np.asarray(N, dtype=float))
    if np.any(~(arr >= math.e)):
        raise ValueError("the relation is increasing only for N >= e")
    lo = np.full_like(arr, math.e)
    hi = np.maximum(arr, math.e)
    s = np.clip(arr / np.log(np.maximum(arr, math.e)), lo, hi)
    for _ in range(100):
        f = s * np.log(s) - arr
        lo = np.where(f < 0, s, lo)
        hi = np.where(f > 0, s, hi)
        step = f / (np.log(s) + 1)
        new = s - step
        bad = (new <= lo) | (new >= hi)
        new = np.where(bad, 0.5 * (lo + hi), new)
        done = np.abs(new - s) <= 1e-15 * new
        s = new
        if np.all(done):
            break
    lam = s * s
    return float(lam[0]) if np.ndim(N) == 0 else lam


@dataclass(frozen=True)
class ModifiedNormalizer:
    """Tabulated inversion N -> lambda(N) of N = (sqrt(lambda) / 2) ln(lambda)."""

    N: np.ndarray
    lam: np.ndarray
    rtol: float = 1e-10

    @classmethod
    def tabulate(cls, N_values: Sequence[float], rtol: float = 1e-10) -> "ModifiedNormalizer":
        N_arr = np.asarray(N_values, dtype=float)
        lam = np.atleast_1d(modified_normalizer(N_arr))
        res = np.abs(_relation(lam) - N_arr) / N_arr
        if np.any(res > rtol):
            raise ArithmeticError(f"inversion residual {res.max():.2e} above {rtol}")
        return cls(N_arr, lam, rtol)

    def __call__(self, N: float) -> float:
        return float(modified_normalizer(N))


def modified_local_weyl(spec: Spectrum, x, N: int) -> float:
    """(1 / sqrt(lambda(N))) sum_{n <= N} |f_n(x)|^2; zero at vertices."""
    _need(spec, N)
    g = spec.graph
    p = g.locate(x)
    if g.vertex_at(p) is not None:
        # Dirichlet everywhere on the harmonic path: every eigenfunction vanishes there
        if isinstance(g.vertices[g.vertex_at(p)].condition, Dirichlet):
            return 0.0
    vals = spec.values_at(p, N) ** 2
    return math.fsum(vals) / math.sqrt(modified_normalizer(N))
