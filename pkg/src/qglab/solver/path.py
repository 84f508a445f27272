"""Path graphs: shooting (secular) function, Pruefer-angle count, spectrum.

A path is cut at its interior Dirichlet vertices into independent segments.
Each segment is flattened into a chain of constant-potential cells with
delta jumps at the cell junctions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .._counting import dirichlet_count_exact, dirichlet_k_for_count, neumann_interval_count
from ..graph import Delta, Dirichlet, GraphValidationError, MetricGraph
from .spectrum import CERTIFICATION_TALLY, COUNT_RTOL, CertificationError, SolverOptions, Spectrum, multiplicities, normalize_coefficients, to_sparse
from .transfer import cell_entries

_PI = math.pi
_EPS = np.finfo(float).eps


@dataclass
class _Chain:
    ell: np.ndarray  # cell lengths
    q: np.ndarray  # cell potentials
    jump: np.ndarray  # delta strength at the start of each cell (jump[0] unused)
    left: float | None  # strength at the left end, None for Dirichlet
    right: float | None
    # (edge id, reversed, first cell, number of cells) in chain order
    edges: list[tuple[int, bool, int, int]]

    @property
    def length(self) -> float:
        return float(self.ell.sum())

    @property
    def free_kirchhoff(self) -> bool:
        """Constant function is an eigenfunction (lambda = 0)."""
        return self.left == 0.0 and self.right == 0.0 and not self.jump[1:].any() and not self.q.any()


def _strength(cond) -> float | None:
    return None if isinstance(cond, Dirichlet) else cond.strength


def path_segments(g: MetricGraph) -> list[_Chain]:
    """Split a path at interior Dirichlet vertices into cell chains."""
    chain = g.path_chain()
    order = g.path_vertices()
    segments = []
    cur_edges: list[tuple[int, bool]] = []
    left = _strength(g.vertices[order[0]].condition)

    def close(right_cond):
        ell, q, jump, meta = [], [], [], []
        for k, (e_id, rev) in enumerate(cur_edges):
            e = g.edges[e_id]
            pot = e.potential.reversed(e.length) if rev else e.potential
            cells = pot.cells(e.length)
            meta.append((e_id, rev, len(ell), len(cells)))
            for c, (cl, cq) in enumerate(cells):
                if c == 0 and k > 0:
                    # interior vertex between previous edge and this one
                    vid = order[idx_of_edge[e_id]]
                    jump.append(g.vertices[vid].condition.strength)
                else:
                    jump.append(0.0)
                ell.append(cl)
                q.append(cq)
        segments.append(_Chain(np.array(ell), np.array(q), np.array(jump), seg_left[0], _strength(right_cond), meta))

    idx_of_edge = {e_id: k for k, (e_id, _) in enumerate(chain)}
    seg_left = [left]
    for k, (e_id, rev) in enumerate(chain):
        cur_edges.append((e_id, rev))
        v_next = order[k + 1]
        cond = g.vertices[v_next].condition
        last = k == len(chain) - 1
        if last:
            close(cond)
        elif isinstance(cond, Dirichlet):
            close(cond)
            cur_edges = []
            seg_left[0] = None
    return segments


# -- secular function --------------------------------------------------------


def _chain_secular(ch: _Chain, lam: np.ndarray) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    if ch.left is None:
        f, g = np.zeros_like(lam), np.ones_like(lam)
    else:
        f, g = np.ones_like(lam), np.full_like(lam, ch.left)
    for i in range(len(ch.ell)):
        if i > 0 and ch.jump[i]:
            g = g + ch.jump[i] * f
        a, b, c, d = cell_entries(ch.ell[i], lam - ch.q[i])
        f, g = a * f + b * g, c * f + d * g
    if ch.right is None:
        return f
    return g + ch.right * f


def secular_path(g: MetricGraph, lam) -> np.ndarray:
    """Shooting residual whose zeros are the eigenvalues of the path ``g``.

    Left-end data (f, f') = (1, sigma_left) or (0, 1) for Dirichlet is carried
    across cells and delta jumps; the residual is f'(L) + sigma_right f(L), or
    f(L) for a Dirichlet right end. Across interior Dirichlet vertices the
    segment residuals are multiplied.
    """
    lam = np.asarray(lam, dtype=float)
    out = np.ones_like(lam)
    for ch in path_segments(g):
        out = out * _chain_secular(ch, lam)
    return out


# -- Pruefer count -----------------------------------------------------------


def _advance(phi: np.ndarray, ell: float, kappa2: np.ndarray) -> np.ndarray:
    """Carry the Pruefer angle (tan phi = f / f') across a constant-q cell."""
    m = np.floor(phi / _PI)
    r = phi - m * _PI
    out = np.empty_like(phi)
    trig = kappa2 > 0
    if np.any(trig):
        kap = np.sqrt(kappa2[trig])
        rt = r[trig]
        # scaled angle (f, f'/kappa) rotates rigidly by kappa * ell; same quadrant as phi
        theta = m[trig] * _PI + np.arctan2(kap * np.sin(rt), np.cos(rt)) + kap * ell
        m2 = np.floor(theta / _PI)
        r2 = theta - m2 * _PI
        out[trig] = m2 * _PI + np.arctan2(np.sin(r2), kap * np.cos(r2))
    hyp = ~trig
    if np.any(hyp):
        rh = r[hyp]
        a, b, c, d = cell_entries(ell, kappa2[hyp])
        s, co = np.sin(rh), np.cos(rh)
        f1 = a * s + b * co
        g1 = c * s + d * co
        # at most one zero of f in a non-oscillatory cell
        crossed = f1 < 0
        base = m[hyp] * _PI
        out[hyp] = np.where(crossed, base + _PI + np.arctan2(-f1, -g1), base + np.arctan2(f1, g1))
    return out


def _jump_angle(phi: np.ndarray, sigma: float) -> np.ndarray:
    m = np.floor(phi / _PI)
    r = phi - m * _PI
    s = np.sin(r)
    return m * _PI + np.arctan2(s, np.cos(r) + sigma * s)


def _chain_angle(ch: _Chain, lam: np.ndarray) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    if ch.left is None:
        phi = np.zeros_like(lam)
    else:
        phi = np.full_like(lam, math.atan2(1.0, ch.left))
    for i in range(len(ch.ell)):
        if i > 0 and ch.jump[i]:
            phi = _jump_angle(phi, ch.jump[i])
        phi = _advance(phi, ch.ell[i], lam - ch.q[i])
    if ch.right is not None and ch.right:
        phi = _jump_angle(phi, ch.right)
    return phi


def _chain_count(ch: _Chain, lam) -> np.ndarray:
    """Eigenvalues <= lam of one segment (Sturm oscillation via Pruefer angle)."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    phi = _chain_angle(ch, lam)
    beta = _PI if ch.right is None else 0.5 * _PI
    cnt = np.floor((phi - beta) / _PI) + 1
    return np.maximum(cnt, 0).astype(np.int64)


def _bracket_bounds(g: MetricGraph, lam: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    qmax = g.max_potential
    lo_lam = np.maximum(lam * (1 - 1e-12) - qmax, 0.0)
    lower = dirichlet_count_exact(g.lengths, lo_lam)
    upper = neumann_interval_count(g.total_length, lam * (1 + 1e-12))
    return np.atleast_1d(lower), np.atleast_1d(upper)


def count_below_path(g: MetricGraph, lam):
    """Number of eigenvalues <= lam, certified against Dirichlet/Neumann brackets.

    Raises CertificationError when the two-sided bound
    N_Dirichlet(lam - max q) <= N(lam) <= N_Neumann-interval(lam) fails.
    """
    scalar = np.ndim(lam) == 0
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    total = np.zeros(lam_arr.shape, dtype=np.int64)
    for ch in path_segments(g):
        total += _chain_count(ch, lam_arr)
    lower, upper = _bracket_bounds(g, lam_arr)
    CERTIFICATION_TALLY["checks"] += lam_arr.size
    bad = (total < lower) | (total > upper)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise CertificationError(
            f"bracketing violated at lambda={lam_arr[i]!r}: {lower[i]} <= {total[i]} <= {upper[i]} fails"
        )
    return int(total[0]) if scalar else total


# -- root location -----------------------------------------------------------


def _bisect_k(ch: _Chain, lo: np.ndarray, hi: np.ndarray, flo: np.ndarray, rtol: float) -> np.ndarray:
    lo, hi = lo.copy(), hi.copy()
    slo = np.sign(flo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = _chain_secular(ch, mid * mid)
        left = np.sign(fm) == slo
        lo = np.where(left, mid, lo)
        hi = np.where(left, hi, mid)
        exact = fm == 0
        lo = np.where(exact, mid, lo)
        hi = np.where(exact, mid, hi)
        if np.all(hi - lo <= np.maximum(rtol * hi, 2 * _EPS * hi)):
            break
    return 0.5 * (lo + hi)


def _tiny_root(ch: _Chain, k_hi: float) -> float:
    """Ground state below the first scan point (near-zero couplings); bisect log k."""
    lo, hi = 1e-150, float(k_hi)
    slo = np.sign(_chain_secular(ch, np.array([lo * lo]))[0])
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        fm = np.sign(_chain_secular(ch, np.array([mid * mid]))[0])
        if fm == 0:
            return mid
        lo, hi = (mid, hi) if fm == slo else (lo, mid)
        if hi - lo <= 2 * _EPS * hi:
            break
    return 0.5 * (lo + hi)


def _chain_roots(ch: _Chain, k_max: float, resolution: float, rtol: float) -> np.ndarray:
    """All roots k in (0, k_max] of one chain, certified by its Pruefer count."""
    zero_root = ch.free_kirchhoff
    for attempt in range(8):
        step = _PI / ch.length * resolution / 2**attempt
        n_pts = int(math.ceil(k_max / step)) + 2
        ks = np.linspace(0.0, step * (n_pts - 1), n_pts)
        ks[0] = step * 1e-6
        F = _chain_secular(ch, ks * ks)
        # grid points landing exactly on a root: nudge
        hit = F == 0
        if np.any(hit):
            ks[hit] *= 1 + 1e-9
            F = _chain_secular(ch, ks * ks)
        sc = np.nonzero(np.sign(F[:-1]) != np.sign(F[1:]))[0]
        roots = _bisect_k(ch, ks[sc], ks[sc + 1], F[sc], rtol) if len(sc) else np.empty(0)
        roots = roots[roots <= k_max]
        if not zero_root and _chain_count(ch, ks[0] ** 2) > 0:
            roots = np.concatenate([[_tiny_root(ch, ks[0])], roots])
        if zero_root:
            roots = np.concatenate([[0.0], roots])
        lam = roots * roots
        # certify: count between consecutive roots equals the index, count at k_max equals total
        probes = np.concatenate([0.5 * (lam[:-1] + lam[1:]), [k_max * k_max]]) if len(lam) else np.array([k_max**2])
        expect = np.arange(1, len(lam) + 1) if len(lam) else np.array([0])
        got = _chain_count(ch, probes)
        if np.array_equal(got, expect):
            CERTIFICATION_TALLY["checks"] += probes.size
            return roots
    raise CertificationError(
        f"root count mismatch on a segment of length {ch.length}: secular scan found {len(lam)} "
        f"roots below k={k_max}, Pruefer count says {int(got[-1])}; scan resolution too coarse"
    )


def _chain_states(ch: _Chain, lam: np.ndarray):
    """(f, f') at the start and end of every chain edge, per eigenvalue."""
    if ch.left is None:
        f, g = np.zeros_like(lam), np.ones_like(lam)
    else:
        f, g = np.ones_like(lam), np.full_like(lam, ch.left)
    out = []
    for e_id, rev, c0, nc in ch.edges:
        if c0 > 0 and ch.jump[c0]:
            g = g + ch.jump[c0] * f
        f0, g0 = f, g
        for i in range(c0, c0 + nc):
            if i > c0 and ch.jump[i]:
                g = g + ch.jump[i] * f
            a, b, c, d = cell_entries(ch.ell[i], lam - ch.q[i])
            f, g = a * f + b * g, c * f + d * g
        out.append((e_id, rev, f0, g0, f, g))
    return out


def solve_spectrum(g: MetricGraph, options: SolverOptions) -> Spectrum:
    """First ``n_target`` eigenvalues (or all <= ``lam_max``) of a path graph.

    Roots of the secular function are bracketed on a uniform k-grid, bisected
    and then certified against the Pruefer count; eigenfunctions are recovered
    by re-propagation and normalized with closed-form cell integrals.
    """
    segments = path_segments(g)
    qmax = g.max_potential
    if options.lam_max is not None:
        # a little headroom so an eigenvalue sitting on lam_max is not lost to rounding
        k_max = math.sqrt(options.lam_max) * (1 + 1e-9)
    else:
        # lambda_n <= n-th eigenvalue of the decoupled Dirichlet cells + max q; one spare for the gap check
        kd = dirichlet_k_for_count(g.lengths, options.n_target + 1)
        k_max = math.sqrt(kd * kd + qmax) * (1 + 1e-9)
    per_seg = [_chain_roots(ch, k_max, options.resolution, options.bisect_tol) for ch in segments]
    lam_all = np.concatenate([r * r for r in per_seg])
    seg_of = np.concatenate([np.full(len(r), i) for i, r in enumerate(per_seg)])
    order = np.argsort(lam_all, kind="stable")
    lam_all, seg_of = lam_all[order], seg_of[order]

    below_max = None
    if options.lam_max is not None:
        below_max = int(np.searchsorted(lam_all, options.lam_max * (1 + COUNT_RTOL), side="right"))
    if options.n_target is not None:
        n = options.n_target
        if below_max is not None:
            n = min(n, below_max)
        elif len(lam_all) < n:
            raise CertificationError(f"only {len(lam_all)} eigenvalues below the Dirichlet bound, expected >= {n}")
    else:
        n = below_max
    lam, seg_of = lam_all[:n], seg_of[:n]

    # global certification at the first gap above the cluster holding lambda_n;
    # decoupled chains can share a level exactly, and no probe separates its copies
    m = n
    while 0 < m < len(lam_all) and lam_all[m] - lam_all[m - 1] <= 1e-9 * max(1.0, lam_all[m]):
        m += 1
    probe = 0.5 * (lam_all[m - 1] + lam_all[m]) if m < len(lam_all) else k_max * k_max
    if n and count_below_path(g, probe) != m:
        raise CertificationError(f"path count at lambda={probe} disagrees with the {m} eigenvalues found below it")

    resid = np.zeros(n)
    coef_a = coef_b = None
    if options.eigenfunctions and n:
        E = len(g.edges)
        A = np.zeros((n, E))
        B = np.zeros((n, E))
        for s, ch in enumerate(segments):
            rows = np.nonzero(seg_of == s)[0]
            if not len(rows):
                continue
            lr = lam[rows]
            for e_id, rev, f0, g0, f1, g1 in _chain_states(ch, lr):
                if rev:
                    A[rows, e_id], B[rows, e_id] = f1, -g1
                else:
                    A[rows, e_id], B[rows, e_id] = f0, g0
            scale = np.maximum(1.0, np.sqrt(lr))
            resid[rows] = np.abs(_chain_secular(ch, lr)) / scale
        A, B = normalize_coefficients(g, lam, A, B)
        coef_a, coef_b = to_sparse(A), to_sparse(B)
    spec = Spectrum(lam, g, coef_a, coef_b, multiplicities(lam), resid, "path-secular", _meta(k_max, options, n, below_max))
    if options.oracle_check and n:
        from .fem import fem_extrapolated

        m = min(n, 20)
        ref = fem_extrapolated(g, m, h=options.fem_h)
        rel = np.abs(ref.eigenvalues[:m] - lam[:m]) / np.maximum(1.0, np.abs(lam[:m]))
        if rel.max() > 1e-6:
            raise CertificationError(f"secular and FEM spectra disagree: max relative deviation {rel.max():.3e}")
    return spec


def _meta(k_max, options, n, below_max):
    meta = {"k_max": k_max}
    if below_max is not None and n == below_max:
        meta["complete_to"] = float(options.lam_max)
    return meta


def check_path(g: MetricGraph) -> None:
    if not g.is_path:
        raise GraphValidationError("graph is not a path")
    for v in g.vertices:
        if not isinstance(v.condition, (Delta, Dirichlet)):
            raise GraphValidationError("unsupported vertex condition")
