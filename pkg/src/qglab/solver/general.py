"""General compact graphs: inertia count of the vertex matrix, bisection, null spaces.

For lambda away from the Dirichlet spectra of the single edges, a solution of
-f'' + q f = lambda f on every edge is fixed by its vertex values u, and the
quadratic form minus lambda restricted to such functions is u^T M(lambda) u with

    M(lambda) = diag(gamma) + sum_e (1 / b_e) [[a_e, -1], [-1, d_e]]

in terms of the edge transfer matrix [[a_e, b_e], [c_e, d_e]]. Hence

    #{lambda_n < lambda} = #{decoupled Dirichlet edge eigenvalues < lambda} + n_minus(M(lambda)),

an exact integer count that brackets every eigenvalue with its multiplicity.
"""

from __future__ import annotations

import math

import numpy as np

from .._counting import dirichlet_count_exact
from ..graph import Dirichlet, MetricGraph
from .path import _Chain, _chain_count
from .spectrum import (
    COUNT_RTOL,
    CERTIFICATION_TALLY,
    CertificationError,
    SolverOptions,
    Spectrum,
    gram_matrix,
    group_clusters,
    multiplicities,
    to_sparse,
)
from .transfer import cell_entries


def edge_transfer(g: MetricGraph, e_id: int, lam) -> tuple[np.ndarray, ...]:
    """Entries (a, b, c, d) of the tail-to-head transfer matrix of one edge."""
    lam = np.asarray(lam, dtype=float)
    e = g.edges[e_id]
    a, b = np.ones_like(lam), np.zeros_like(lam)
    c, d = np.zeros_like(lam), np.ones_like(lam)
    for ell, q in e.potential.cells(e.length):
        a1, b1, c1, d1 = cell_entries(ell, lam - q)
        a, b, c, d = a1 * a + b1 * c, a1 * b + b1 * d, c1 * a + d1 * c, c1 * b + d1 * d
    return a, b, c, d


# fraction at which an edge close to one of its own Dirichlet poles is cut
_GOLDEN = (3 - math.sqrt(5)) / 2
# edges with |sin(k l)| (suitably scaled) below this are cut for the count
_POLE_RATIO = 0.1


class _Piece:
    """A run of constant-potential cells: transfer entries and Dirichlet count."""

    def __init__(self, cells):
        self.ell = np.array([c[0] for c in cells])
        self.q = np.array([c[1] for c in cells])
        self.length = float(self.ell.sum())
        self.plain = not self.q.any()
        self.chain = None if self.plain else _Chain(self.ell, self.q, np.zeros(len(self.ell)), None, None, [])

    def transfer(self, lam):
        a, b = np.ones_like(lam), np.zeros_like(lam)
        c, d = np.zeros_like(lam), np.ones_like(lam)
        for ell, q in zip(self.ell, self.q):
            a1, b1, c1, d1 = cell_entries(ell, lam - q)
            a, b, c, d = a1 * a + b1 * c, a1 * b + b1 * d, c1 * a + d1 * c, c1 * b + d1 * d
        return a, b, d

    def dirichlet_below(self, lam):
        if self.plain:
            x = np.sqrt(np.maximum(lam, 0.0)) * self.length / math.pi
            return (np.ceil(x) - 1).clip(min=0).astype(np.int64)
        return _chain_count(self.chain, lam)


def _split_cells(e, at):
    left, right = e.potential.split(e.length, at)
    return left.cells(at), right.cells(e.length - at)


class _GraphCounter:
    """Vectorized exact count of eigenvalues below lambda for a fixed graph.

    An edge whose transfer entry b nearly vanishes (lambda close to one of
    its Dirichlet eigenvalues) makes M(lambda) ill-conditioned; for such
    lambda the edge is cut by an extra Delta(0) vertex at a golden-ratio
    point, which leaves the count unchanged but moves the pole away.
    """

    def __init__(self, g: MetricGraph):
        self.g = g
        conds = g.conditions
        self.free_idx = [v for v, c in enumerate(conds) if not isinstance(c, Dirichlet)]
        self.pos = {v: i for i, v in enumerate(self.free_idx)}
        self.gamma = np.array([conds[v].strength for v in self.free_idx])
        self.whole = []
        self.halves = []
        for e in g.edges:
            self.whole.append(_Piece(e.potential.cells(e.length)))
            lc, rc = _split_cells(e, _GOLDEN * e.length)
            self.halves.append((_Piece(lc), _Piece(rc)))

    @staticmethod
    def _near_pole(b, lam, length):
        scale = np.minimum(length, 1.0 / np.sqrt(np.maximum(lam, 1e-300)))
        return np.abs(b) < _POLE_RATIO * scale

    def _add_block(self, M, rows, i, j, a, b, d):
        inv = 1.0 / b
        if i is not None:
            M[rows, i, i] += a * inv
        if j is not None:
            M[rows, j, j] += d * inv
        if i is not None and j is not None:
            M[rows, i, j] -= inv
            M[rows, j, i] -= inv

    def below(self, lam) -> np.ndarray:
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        nv = len(self.free_idx)
        E = len(self.g.edges)
        out = np.zeros(len(lam), dtype=np.int64)
        # vertex slots first, then one slot per edge for the optional cut point
        M = np.zeros((len(lam), nv + E, nv + E))
        M[:, np.arange(nv), np.arange(nv)] = self.gamma
        all_rows = np.arange(len(lam))
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            for i, e in enumerate(self.g.edges):
                t, h = self.pos.get(e.tail), self.pos.get(e.head)
                a, b, d = self.whole[i].transfer(lam)
                cut = self._near_pole(b, lam, e.length)
                keep = ~cut
                s = nv + i
                M[keep, s, s] = 1.0  # unused slot, positive so it adds no negative direction
                rk = all_rows[keep]
                self._add_block(M, rk, t, h, a[keep], b[keep], d[keep])
                out[keep] += self.whole[i].dirichlet_below(lam[keep])
                if np.any(cut):
                    rc = all_rows[cut]
                    lc = lam[cut]
                    p1, p2 = self.halves[i]
                    a1, b1, d1 = p1.transfer(lc)
                    a2, b2, d2 = p2.transfer(lc)
                    self._add_block(M, rc, t, s, a1, b1, d1)
                    self._add_block(M, rc, s, h, a2, b2, d2)
                    out[cut] += p1.dirichlet_below(lc) + p2.dirichlet_below(lc)
        ok = np.all(np.isfinite(M), axis=(1, 2))
        if not np.all(ok):
            # lambda sits exactly on a pole of a cut piece; nudge and retry
            lam2 = lam.copy()
            lam2[~ok] *= 1 + 1e-14
            return self.below(lam2)
        if nv + E:
            out = out + (np.linalg.eigvalsh(M) < 0).sum(axis=1)
        return out


def count_below_graph(g: MetricGraph, lam):
    """Number of eigenvalues <= lam of a general graph, checked against brackets.

    Lower bracket: decoupled Dirichlet edges with the potential raised to its
    maximum. Upper bracket: decoupled Dirichlet edges without potential plus
    the number of vertices (a rank-|V| relaxation of the form domain).
    """
    scalar = np.ndim(lam) == 0
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    counter = _GraphCounter(g)
    got = counter.below(lam_arr * (1 + 1e-12) + 1e-300)
    _check_brackets(g, lam_arr, got)
    return int(got[0]) if scalar else got


def _check_brackets(g: MetricGraph, lam: np.ndarray, got: np.ndarray) -> None:
    qmax = g.max_potential
    lower = np.atleast_1d(dirichlet_count_exact(g.lengths, np.maximum(lam * (1 - 1e-12) - qmax, 0.0)))
    upper = np.atleast_1d(dirichlet_count_exact(g.lengths, lam * (1 + 1e-12))) + len(g.vertices)
    CERTIFICATION_TALLY["checks"] += lam.size
    bad = (got < lower) | (got > upper)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise CertificationError(
            f"graph bracketing violated at lambda={lam[i]!r}: {lower[i]} <= {got[i]} <= {upper[i]} fails"
        )


def _dirichlet_k_table(lengths: np.ndarray, n: int) -> np.ndarray:
    """Sorted k-values of the first n eigenvalues of the decoupled free Dirichlet edges."""
    kb = math.pi * (n + len(lengths)) / lengths.sum()
    ks = np.concatenate([math.pi * np.arange(1, int(kb * ell / math.pi) + 2) / ell for ell in lengths])
    ks.sort()
    return ks[:n]


def _free_kirchhoff(g: MetricGraph) -> bool:
    return all(not isinstance(c, Dirichlet) and c.strength == 0 for c in g.conditions) and g.max_potential == 0


def _matching_matrix(g: MetricGraph, lam: float, kscale: float) -> np.ndarray:
    """Vertex conditions as a 2E x 2E matrix acting on (A_e, B_e / kscale)."""
    E = len(g.edges)
    T = [tuple(float(x) for x in edge_transfer(g, i, np.array(lam))) for i in range(E)]
    rows = []
    for v, cond in enumerate(g.conditions):
        vals, ders = [], []
        for i, side in g.incident(v):
            a, b, c, d = T[i]
            val = np.zeros(2 * E)
            der = np.zeros(2 * E)
            if side == 0:
                val[2 * i] = 1.0
                der[2 * i + 1] = kscale
            else:
                val[2 * i], val[2 * i + 1] = a, b * kscale
                der[2 * i], der[2 * i + 1] = -c, -d * kscale
            vals.append(val)
            ders.append(der / kscale)
        for j in range(1, len(vals)):
            rows.append(vals[j] - vals[0])
        if isinstance(cond, Dirichlet):
            rows.append(vals[0])
        else:
            rows.append(sum(ders) - cond.strength / kscale * vals[0])
    return np.array(rows)


def solve_spectrum_graph(g: MetricGraph, options: SolverOptions) -> Spectrum:
    """First eigenvalues (with multiplicity) and eigenfunctions of a general graph.

    Eigenvalue n is located by bisection in k on the exact count; clusters
    share one null space of the vertex-matching matrix, orthonormalized with
    the closed-form Gram matrix.
    """
    counter = _GraphCounter(g)
    qmax = g.max_potential
    if options.n_target is not None:
        n = options.n_target
        if options.lam_max is not None:
            n = min(n, int(counter.below(np.array([options.lam_max * (1 + COUNT_RTOL)]))[0]))
    else:
        n = int(counter.below(np.array([options.lam_max * (1 + COUNT_RTOL)]))[0])
    if n == 0:
        return Spectrum(np.empty(0), g, None, None, np.empty(0, int), np.empty(0), "graph-inertia", {})
    m = n + 1  # one spare for certification of the gap above lambda_n
    kd = _dirichlet_k_table(g.lengths, m)
    hi = np.sqrt(kd**2 + qmax) * (1 + 1e-9)
    lo = np.zeros(m)
    target = np.arange(1, m + 1)
    tol = options.bisect_tol
    for _ in range(200):
        active = hi - lo > tol * hi
        if not np.any(active):
            break
        mid = 0.5 * (lo[active] + hi[active])
        cnt = counter.below(mid * mid)
        up = cnt >= target[active]
        hi[active] = np.where(up, mid, hi[active])
        lo[active] = np.where(up, lo[active], mid)
    k = 0.5 * (lo + hi)
    if _free_kirchhoff(g):
        k[0] = 0.0
    lam_all = k * k
    lam = lam_all[:n]

    # certification: counts strictly between clusters and the brackets there
    clusters = group_clusters(lam_all)
    probes, expect = [], []
    for (i0, j0), (i1, _) in zip(clusters[:-1], clusters[1:]):
        probes.append(0.5 * (lam_all[j0 - 1] + lam_all[i1]))
        expect.append(j0)
    if probes:
        probes = np.array(probes)
        got = counter.below(probes)
        if not np.array_equal(got, np.array(expect)):
            bad = int(np.argmax(got != np.array(expect)))
            raise CertificationError(f"count {got[bad]} at lambda={probes[bad]} disagrees with index {expect[bad]}")
        _check_brackets(g, probes, got)

    coef_a = coef_b = None
    resid = np.zeros(n)
    if options.eigenfunctions:
        E = len(g.edges)
        A = np.zeros((n, E))
        B = np.zeros((n, E))
        for i0, j0 in group_clusters(lam):
            # include the rest of a cluster cut by n so the null space is complete
            mult = j0 - i0
            full = next(j for a_, j in clusters if a_ <= i0 < j) - i0
            lam_c = float(lam[i0:j0].mean())
            ks = max(1.0, math.sqrt(lam_c))
            S = _matching_matrix(g, lam_c, ks)
            _, sv, Vt = np.linalg.svd(S)
            null = Vt[-full:][:mult]
            resid[i0:j0] = sv[-full:][:mult] / max(sv[0], 1.0)
            Ac = null[:, 0::2]
            Bc = null[:, 1::2] * ks
            G = gram_matrix(g, lam_c, Ac, Bc)
            w, U = np.linalg.eigh(G)
            W = U / np.sqrt(w)  # columns give G-orthonormal combinations
            A[i0:j0] = W.T @ Ac
            B[i0:j0] = W.T @ Bc
        coef_a, coef_b = to_sparse(A), to_sparse(B)
    meta = {"lam_next": float(lam_all[n])}
    if options.lam_max is not None and lam_all[n] > options.lam_max * (1 + COUNT_RTOL):
        meta["complete_to"] = float(options.lam_max)
    spec = Spectrum(lam, g, coef_a, coef_b, multiplicities(lam), resid, "graph-inertia", meta)
    if options.oracle_check:
        from .fem import fem_extrapolated

        mm = min(n, 20)
        ref = fem_extrapolated(g, mm, h=options.fem_h)
        rel = np.abs(ref.eigenvalues[:mm] - lam[:mm]) / np.maximum(1.0, np.abs(lam[:mm]))
        if rel.max() > 1e-6:
            raise CertificationError(f"inertia and FEM spectra disagree: max relative deviation {rel.max():.3e}")
    return spec
