"""Metric graphs with delta/Dirichlet vertex conditions and their builders.

Vertices carry a :class:`Delta` (finite non-negative coupling, ``Delta(0)``
being the standard Kirchhoff condition) or :class:`Dirichlet` condition.
Edges carry a length and a piecewise-constant non-negative potential.
Infinite graphs only appear through truncation builders.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np


class GraphValidationError(ValueError):
    """Raised when a graph or builder input violates a structural invariant."""


@dataclass(frozen=True)
class Delta:
    """delta-coupling of the given strength; ``Delta(0)`` is Kirchhoff."""

    strength: float = 0.0

    def __post_init__(self):
        s = float(self.strength)
        if not math.isfinite(s) or s < 0:
            raise GraphValidationError(f"delta strength must be finite and >= 0, got {self.strength!r}")
        object.__setattr__(self, "strength", s)

    def __str__(self):
        return f"delta:{self.strength:g}"


@dataclass(frozen=True)
class Dirichlet:
    """Vanishing condition (the sigma = infinity limit)."""

    def __str__(self):
        return "dirichlet"


VertexCondition = Union[Delta, Dirichlet]


def as_condition(value) -> VertexCondition:
    """Coerce a float, ``inf``, a ``"delta:<s>"``/``"dirichlet"`` string or a condition."""
    if isinstance(value, (Delta, Dirichlet)):
        return value
    if isinstance(value, str):
        text = value.strip().lower()
        if text == "dirichlet":
            return Dirichlet()
        if text.startswith("delta:"):
            try:
                return Delta(float(text[len("delta:"):]))
            except ValueError as exc:
                raise GraphValidationError(f"bad condition string {value!r}") from exc
        raise GraphValidationError(f"bad condition string {value!r}")
    s = float(value)
    if s == math.inf:
        return Dirichlet()
    return Delta(s)


def combine_conditions(a: VertexCondition, b: VertexCondition) -> VertexCondition:
    """Two couplings at the same point: strengths add, Dirichlet absorbs."""
    if isinstance(a, Dirichlet) or isinstance(b, Dirichlet):
        return Dirichlet()
    return Delta(a.strength + b.strength)


@dataclass(frozen=True)
class PiecewisePotential:
    """Piecewise-constant potential on one edge.

    ``values`` has one entry more than ``breakpoints``; breakpoints are local
    coordinates in ``(0, length)``. No breakpoints and no values means q = 0.
    """

    breakpoints: tuple[float, ...] = ()
    values: tuple[float, ...] = ()

    def __post_init__(self):
        bps = tuple(float(b) for b in self.breakpoints)
        vals = tuple(float(v) for v in self.values)
        if not vals:
            if bps:
                raise GraphValidationError("breakpoints given without values")
            vals = (0.0,)
        if len(vals) != len(bps) + 1:
            raise GraphValidationError("potential needs len(values) == len(breakpoints) + 1")
        if any(not math.isfinite(v) or v < 0 for v in vals):
            raise GraphValidationError("potential values must be finite and >= 0")
        if any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
            raise GraphValidationError("potential breakpoints must increase strictly")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, value: float) -> "PiecewisePotential":
        return cls((), (value,))

    @property
    def is_zero(self) -> bool:
        return all(v == 0.0 for v in self.values)

    @property
    def max_value(self) -> float:
        return max(self.values)

    def cells(self, length: float) -> list[tuple[float, float]]:
        """(cell length, q) pairs covering ``[0, length]``."""
        if self.breakpoints and (self.breakpoints[0] <= 0 or self.breakpoints[-1] >= length):
            raise GraphValidationError("potential breakpoints must lie inside (0, length)")
        edges = (0.0, *self.breakpoints, length)
        return [(b - a, q) for a, b, q in zip(edges, edges[1:], self.values)]

    def integral(self, length: float) -> float:
        return sum(ell * q for ell, q in self.cells(length))

    def split(self, length: float, at: float) -> tuple["PiecewisePotential", "PiecewisePotential"]:
        """Restrict to ``[0, at]`` and ``[at, length]`` (second re-based to 0)."""
        left_bp, left_val, right_bp, right_val = [], [], [], []
        edges = (0.0, *self.breakpoints, length)
        for a, b, q in zip(edges, edges[1:], self.values):
            if a < at:
                if left_val:
                    left_bp.append(a)
                left_val.append(q)
            if b > at:
                if right_val:
                    right_bp.append(a - at)
                right_val.append(q)
        return PiecewisePotential(tuple(left_bp), tuple(left_val)), PiecewisePotential(tuple(right_bp), tuple(right_val))

    def reversed(self, length: float) -> "PiecewisePotential":
        return PiecewisePotential(tuple(length - b for b in reversed(self.breakpoints)), tuple(reversed(self.values)))


@dataclass(frozen=True)
class Vertex:
    condition: VertexCondition = Delta(0.0)
    position: float | None = None  # path coordinate, when meaningful
    attached: bool = False  # True for vertices added on top of a base graph


@dataclass(frozen=True)
class Edge:
    tail: int
    head: int
    length: float
    potential: PiecewisePotential = field(default_factory=PiecewisePotential)


@dataclass(frozen=True)
class GraphPoint:
    """A point at local coordinate ``t`` of edge ``edge`` (0 = tail, length = head)."""

    edge: int
    t: float


@dataclass(frozen=True)
class MetricGraph:
    """Finite, connected, loop-free metric graph.

    Vertex ids are the indices into ``vertices``; edge ids index ``edges``.
    """

    vertices: tuple[Vertex, ...]
    edges: tuple[Edge, ...]

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "edges", tuple(self.edges))
        nv = len(self.vertices)
        if nv < 2 or not self.edges:
            raise GraphValidationError("a metric graph needs at least one edge")
        for i, e in enumerate(self.edges):
            if not (0 <= e.tail < nv and 0 <= e.head < nv):
                raise GraphValidationError(f"edge {i} references an unknown vertex")
            if e.tail == e.head:
                raise GraphValidationError(f"edge {i} is a loop; loops are not supported")
            if not (math.isfinite(e.length) and e.length > 0):
                raise GraphValidationError(f"edge {i} has non-positive length {e.length!r}")
            e.potential.cells(e.length)
        deg = self.degrees
        if any(d == 0 for d in deg):
            raise GraphValidationError("isolated vertex")
        # connectivity of the combinatorial graph
        adj = [[] for _ in range(nv)]
        for e in self.edges:
            adj[e.tail].append(e.head)
            adj[e.head].append(e.tail)
        seen = {0}
        stack = [0]
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        if len(seen) != nv:
            raise GraphValidationError("graph is not connected")

    @property
    def degrees(self) -> list[int]:
        deg = [0] * len(self.vertices)
        for e in self.edges:
            deg[e.tail] += 1
            deg[e.head] += 1
        return deg

    def degree(self, v: int) -> int:
        return self.degrees[v]

    @property
    def total_length(self) -> float:
        return math.fsum(e.length for e in self.edges)

    @property
    def lengths(self) -> np.ndarray:
        return np.array([e.length for e in self.edges])

    @property
    def conditions(self) -> list[VertexCondition]:
        return [v.condition for v in self.vertices]

    def incident(self, v: int) -> list[tuple[int, int]]:
        """(edge id, side) pairs at ``v``; side 0 is the tail end, 1 the head end."""
        out = []
        for i, e in enumerate(self.edges):
            if e.tail == v:
                out.append((i, 0))
            if e.head == v:
                out.append((i, 1))
        return out

    @property
    def min_cell_length(self) -> float:
        return min(ell for e in self.edges for ell, _ in e.potential.cells(e.length))

    @property
    def max_potential(self) -> float:
        return max(e.potential.max_value for e in self.edges)

    @property
    def potential_integral(self) -> float:
        return math.fsum(e.potential.integral(e.length) for e in self.edges)

    # -- path helpers -------------------------------------------------

    def path_chain(self) -> list[tuple[int, bool]]:
        """Edges of a path graph in order from its first end, with reversal flags.

        Raises GraphValidationError if the graph is not a path.
        """
        deg = self.degrees
        if len(self.edges) != len(self.vertices) - 1 or max(deg) > 2:
            raise GraphValidationError("graph is not a path")
        ends = [v for v, d in enumerate(deg) if d == 1]
        start = min(ends)
        # prefer the end with the smaller position when positions exist
        if all(self.vertices[v].position is not None for v in ends):
            start = min(ends, key=lambda v: (self.vertices[v].position, v))
        chain = []
        used = set()
        v = start
        while len(chain) < len(self.edges):
            for i, side in self.incident(v):
                if i not in used:
                    used.add(i)
                    chain.append((i, side == 1))
                    e = self.edges[i]
                    v = e.head if side == 0 else e.tail
                    break
        return chain

    @property
    def is_path(self) -> bool:
        try:
            self.path_chain()
        except GraphValidationError:
            return False
        return True

    def path_vertices(self) -> list[int]:
        chain = self.path_chain()
        e0, rev0 = chain[0]
        first = self.edges[e0].head if rev0 else self.edges[e0].tail
        order = [first]
        for i, rev in chain:
            e = self.edges[i]
            order.append(e.tail if rev else e.head)
        return order

    def path_positions(self) -> np.ndarray:
        """Arc-length coordinate of each path vertex, in path order."""
        chain = self.path_chain()
        return np.concatenate([[0.0], np.cumsum([self.edges[i].length for i, _ in chain])])

    def locate(self, x) -> GraphPoint:
        """Turn a path coordinate (or a GraphPoint) into a GraphPoint.

        At an interior vertex the point is reported on the edge that starts there.
        """
        if isinstance(x, GraphPoint):
            e = self.edges[x.edge]
            if not (0 <= x.t <= e.length):
                raise GraphValidationError(f"point {x} lies outside its edge")
            return x
        if isinstance(x, tuple):
            return self.locate(GraphPoint(int(x[0]), float(x[1])))
        chain = self.path_chain()
        pos = self.path_positions()
        x = float(x)
        total = pos[-1]
        if x < 0 or x > total * (1 + 1e-15):
            raise GraphValidationError(f"x = {x} is outside [0, {total}]")
        k = int(np.searchsorted(pos, x, side="right")) - 1
        k = min(max(k, 0), len(chain) - 1)
        i, rev = chain[k]
        t = min(x - pos[k], self.edges[i].length)
        return GraphPoint(i, self.edges[i].length - t if rev else t)

    def vertex_at(self, p: GraphPoint, rtol: float = 1e-14) -> int | None:
        """Vertex id if ``p`` coincides with an edge end, else None."""
        e = self.edges[p.edge]
        tol = rtol * max(1.0, e.length)
        if abs(p.t) <= tol:
            return e.tail
        if abs(p.t - e.length) <= tol:
            return e.head
        return None

    def point_degree(self, p: GraphPoint) -> int:
        v = self.vertex_at(p)
        return 2 if v is None else self.degree(v)

    def with_conditions(self, conditions: Sequence[VertexCondition]) -> "MetricGraph":
        if len(conditions) != len(self.vertices):
            raise GraphValidationError("one condition per vertex required")
        return replace(self, vertices=tuple(replace(v, condition=c) for v, c in zip(self.vertices, conditions)))

    def without_potential(self) -> "MetricGraph":
        return replace(self, edges=tuple(replace(e, potential=PiecewisePotential()) for e in self.edges))

    def with_potential(self, potentials: Sequence[PiecewisePotential]) -> "MetricGraph":
        return replace(self, edges=tuple(replace(e, potential=p) for e, p in zip(self.edges, potentials)))


# -- builders -------------------------------------------------------------


def build_path_graph(
    lengths: Sequence[float],
    sigmas: Sequence,
    left_condition: VertexCondition | None = None,
    right_condition: VertexCondition | None = Delta(0.0),
) -> MetricGraph:
    """Path graph with vertices at the partial sums of ``lengths``.

    ``sigmas[0]`` couples at the left end ``x = 0`` and ``sigmas[n]`` at the
    n-th interior vertex; a trailing extra entry, when present, couples at the
    right end. Entries may be floats (``inf`` meaning Dirichlet), condition
    strings or conditions. ``left_condition``/``right_condition`` are combined
    with the respective entry (strengths add, Dirichlet absorbs).
    """
    lengths = [float(x) for x in lengths]
    if not lengths:
        raise GraphValidationError("need at least one edge")
    if any(not (math.isfinite(x) and x > 0) for x in lengths):
        raise GraphValidationError("edge lengths must be positive and finite")
    conds = [as_condition(s) for s in sigmas]
    n = len(lengths)
    if len(conds) == n:
        conds.append(Delta(0.0))
    elif len(conds) != n + 1:
        raise GraphValidationError(f"expected {n} or {n + 1} vertex couplings, got {len(conds)}")
    if left_condition is not None:
        conds[0] = combine_conditions(conds[0], as_condition(left_condition))
    if right_condition is not None:
        conds[-1] = combine_conditions(conds[-1], as_condition(right_condition))
    positions = np.concatenate([[0.0], np.cumsum(lengths)])
    vertices = tuple(Vertex(c, float(p)) for c, p in zip(conds, positions))
    edges = tuple(Edge(i, i + 1, ell) for i, ell in enumerate(lengths))
    return MetricGraph(vertices, edges)


def star_graph(
    lengths: Sequence[float],
    center: VertexCondition = Delta(0.0),
    outer: VertexCondition | Sequence[VertexCondition] = Delta(0.0),
    potentials: Sequence[PiecewisePotential] | None = None,
) -> MetricGraph:
    """Star with vertex 0 in the center; edge i runs from the center to vertex i + 1."""
    n = len(lengths)
    outer = [outer] * n if isinstance(outer, (Delta, Dirichlet)) else list(outer)
    potentials = potentials or [PiecewisePotential()] * n
    vertices = (Vertex(as_condition(center)),) + tuple(Vertex(as_condition(c)) for c in outer)
    edges = tuple(Edge(0, i + 1, float(ell), p) for i, (ell, p) in enumerate(zip(lengths, potentials)))
    return MetricGraph(vertices, edges)


@dataclass(frozen=True)
class LengthRule:
    """Positive edge-length sequence (L_n) summing to ``L``.

    kinds: ``geometric`` (L_n = L (1 - r) r^(n-1)), ``inverse_square``
    (L_n = 6 L / (pi n)^2), ``explicit`` (given values; only as many as listed).
    """

    kind: str = "geometric"
    ratio: float = 0.5
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("geometric", "inverse_square", "explicit"):
            raise GraphValidationError(f"unknown length rule {self.kind!r}")
        if self.kind == "geometric" and not 0 < self.ratio < 1:
            raise GraphValidationError("geometric ratio must lie in (0, 1)")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    def lengths(self, L: float, M: int) -> np.ndarray:
        n = np.arange(1, M + 1, dtype=float)
        if self.kind == "geometric":
            return L * (1 - self.ratio) * self.ratio ** (n - 1)
        if self.kind == "inverse_square":
            return 6.0 * L / (math.pi * n) ** 2
        if M > len(self.values):
            raise GraphValidationError(f"explicit length rule has only {len(self.values)} entries")
        return np.array(self.values[:M])


@dataclass(frozen=True)
class PathFamily:
    """One of the two infinite path constructions.

    ``finite_length``: vertices v_1 = 0 < v_2 < ... accumulating at ``L`` with
    gaps given by ``length_rule``. ``harmonic``: Dirichlet cells of length pi/m.
    """

    kind: str = "finite_length"
    L: float = math.pi
    length_rule: LengthRule = LengthRule()

    def __post_init__(self):
        if self.kind not in ("finite_length", "harmonic"):
            raise GraphValidationError(f"unknown path family {self.kind!r}")
        if self.kind == "finite_length" and not (math.isfinite(self.L) and self.L > 0):
            raise GraphValidationError("L must be positive and finite")


@dataclass(frozen=True)
class SigmaSequence:
    """Non-negative coupling sequence sigma_1, sigma_2, ...

    kinds: ``geometric`` (scale * ratio**n), ``harmonic`` (scale / n),
    ``explicit`` (listed values, zero afterwards) or ``rule`` (callable of the
    1-based index; ``summable`` must then be declared).
    """

    kind: str = "explicit"
    values: tuple[float, ...] = ()
    scale: float = 1.0
    ratio: float = 0.5
    rule: Callable[[np.ndarray], np.ndarray] | None = None
    summable: bool | None = None

    def __post_init__(self):
        if self.kind not in ("geometric", "harmonic", "explicit", "rule"):
            raise GraphValidationError(f"unknown sigma rule {self.kind!r}")
        vals = tuple(float(v) for v in self.values)
        if any(not math.isfinite(v) or v < 0 for v in vals):
            raise GraphValidationError("sigma values must be finite and >= 0")
        object.__setattr__(self, "values", vals)
        if self.scale < 0:
            raise GraphValidationError("sigma scale must be >= 0")
        if self.kind == "geometric" and not 0 <= self.ratio < 1:
            raise GraphValidationError("geometric sigma ratio must lie in [0, 1)")
        if self.kind == "rule" and (self.rule is None or self.summable is None):
            raise GraphValidationError("a rule-based sigma needs the callable and a declared summability")

    @property
    def is_l1(self) -> bool:
        if self.kind == "rule":
            return bool(self.summable)
        return self.kind != "harmonic" or self.scale == 0

    def take(self, M: int) -> np.ndarray:
        """sigma_1 .. sigma_M."""
        n = np.arange(1, M + 1, dtype=float)
        if self.kind == "geometric":
            out = self.scale * self.ratio**n
        elif self.kind == "harmonic":
            out = self.scale / n
        elif self.kind == "explicit":
            out = np.zeros(M)
            k = min(M, len(self.values))
            out[:k] = self.values[:k]
        else:
            out = np.asarray(self.rule(n), dtype=float)
        if np.any(out < 0) or not np.all(np.isfinite(out)):
            raise GraphValidationError("sigma rule produced a negative or non-finite entry")
        return out

    def tail_sum(self, start: int = 1) -> float:
        """sum_{n >= start} sigma_n; +inf outside l^1."""
        if not self.is_l1:
            return math.inf
        if self.kind == "geometric":
            return self.scale * self.ratio**start / (1 - self.ratio)
        if self.kind == "explicit":
            return math.fsum(self.values[start - 1:])
        # declared-summable rule: sum far enough and check the partial sums settle
        vals = self.take(10**6)
        return math.fsum(vals[start - 1:])

    def check_partial_sums(self, M: int, tol: float = 1e-8) -> bool:
        """Partial sums up to M are monotone and (for l^1 rules) Cauchy to ``tol``."""
        s = np.cumsum(self.take(M))
        if np.any(np.diff(s) < 0):
            return False
        if not self.is_l1:
            return True
        half = max(M // 2, 1)
        return bool(s[-1] - s[half - 1] <= tol * max(1.0, s[-1]))


def truncate_family(family: PathFamily, sigma: SigmaSequence | None, M: int) -> MetricGraph:
    """Finite truncation at order ``M``.

    finite_length: ``M`` coupled vertices v_1..v_M (sigma cut off beyond M)
    plus a closing edge so the total length stays exactly ``L``; the right end
    carries Delta(0). harmonic: the first ``M`` Dirichlet cells.
    """
    if M < 1:
        raise GraphValidationError("truncation order must be >= 1")
    if family.kind == "harmonic":
        lengths = [math.pi / m for m in range(1, M + 1)]
        return build_path_graph(lengths, [Dirichlet()] * (M + 1), right_condition=None)
    L = float(family.L)
    lens = family.length_rule.lengths(L, M)
    remainder = L - math.fsum(lens)
    if not remainder > 0:
        raise GraphValidationError(f"length rule exhausted L = {L} before order M = {M}")
    sig = sigma.take(M) if sigma is not None else np.zeros(M)
    couplings = [Delta(float(s)) for s in sig] + [Delta(0.0), Delta(0.0)]
    g = build_path_graph(list(lens) + [remainder], couplings, right_condition=None)
    # pin the closing vertex to L exactly
    verts = list(g.vertices)
    verts[-1] = replace(verts[-1], position=L)
    return replace(g, vertices=tuple(verts))


def _accumulates_toward_end(gaps: Sequence[float]) -> bool:
    """Gaps ordered toward an end, the last one being the closing gap to it.

    Reads as accumulation when the gaps between placed points strictly shrink
    (at least two of them) and the closing gap is no larger than the last one.
    Equal gaps up to rounding do not count as shrinking.
    """
    inner, closing = list(gaps[1:-1]), gaps[-1]
    shrink = all(b < a * (1 - 1e-9) for a, b in zip(inner, inner[1:]))
    return len(inner) >= 2 and shrink and closing <= inner[-1] * (1 + 1e-9)


def attach_delta_vertices(g0: MetricGraph, placements: Sequence[tuple[int, Sequence[float], Sequence[float]]]) -> MetricGraph:
    """Split edges of ``g0`` by new delta vertices.

    Each placement is ``(edge id, positions, strengths)`` with positions in
    local edge coordinates, strictly inside and increasing. New vertices get
    degree 2 and ``Delta(strength)``; they are appended after the original
    vertices and flagged ``attached``. A placement whose gaps shrink strictly
    toward an edge end (see ``_accumulates_toward_end``) is read as a truncated cluster
    accumulating at that end vertex, which must carry ``Delta(0)``.
    """
    by_edge: dict[int, tuple[list[float], list[float]]] = {}
    for edge_id, positions, strengths in placements:
        if not 0 <= edge_id < len(g0.edges):
            raise GraphValidationError(f"unknown edge id {edge_id}")
        if edge_id in by_edge:
            raise GraphValidationError(f"edge {edge_id} listed twice")
        pos = [float(p) for p in positions]
        st = [float(s) for s in strengths]
        if len(pos) != len(st):
            raise GraphValidationError("positions and strengths differ in length")
        ell = g0.edges[edge_id].length
        if any(not 0 < p < ell for p in pos):
            raise GraphValidationError(f"positions must lie strictly inside (0, {ell}) on edge {edge_id}")
        if any(b <= a for a, b in zip(pos, pos[1:])):
            raise GraphValidationError(f"positions on edge {edge_id} must increase strictly")
        if any(s < 0 or not math.isfinite(s) for s in st):
            raise GraphValidationError("attached strengths must be finite and >= 0")
        if pos:
            e = g0.edges[edge_id]
            pts = [0.0, *pos, ell]
            gaps = np.diff(pts)
            for end_vertex, seq in ((e.head, gaps), (e.tail, gaps[::-1])):
                if _accumulates_toward_end(list(seq)):
                    cond = g0.vertices[end_vertex].condition
                    if not (isinstance(cond, Delta) and cond.strength == 0.0):
                        raise GraphValidationError(
                            f"vertices accumulate at vertex {end_vertex}, which is not a standard (Delta(0)) vertex"
                        )
        by_edge[edge_id] = (pos, st)

    vertices = list(g0.vertices)
    edges = []
    for i, e in enumerate(g0.edges):
        if i not in by_edge or not by_edge[i][0]:
            edges.append(e)
            continue
        pos, st = by_edge[i]
        prev_v, prev_t = e.tail, 0.0
        rest = e.potential
        for p, s in zip(pos, st):
            vertices.append(Vertex(Delta(s), attached=True))
            new_v = len(vertices) - 1
            piece, rest = rest.split(e.length - prev_t, p - prev_t)
            edges.append(Edge(prev_v, new_v, p - prev_t, piece))
            prev_v, prev_t = new_v, p
        edges.append(Edge(prev_v, e.head, e.length - prev_t, rest))
    return MetricGraph(tuple(vertices), tuple(edges))


def geometric_positions(length: float, M: int, ratio: float = 0.5, toward: str = "head") -> np.ndarray:
    """M positions accumulating geometrically at one end of an edge.

    Distances to the end are ``length * ratio**n``, n = 1..M.
    """
    d = length * ratio ** np.arange(1, M + 1, dtype=float)
    return np.sort(length - d) if toward == "head" else np.sort(d)
