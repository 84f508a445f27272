"""Spectrum container and eigenfunction evaluation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from ..graph import Dirichlet, GraphPoint, MetricGraph
from .transfer import cell_entries


# eigenvalues within this relative distance of lambda count as <= lambda (bisection leaves ~1e-13)
COUNT_RTOL = 1e-11


class CertificationError(RuntimeError):
    """A solver self-check failed (count mismatch, bracketing violation, oracle disagreement)."""

    def __init__(self, *args):
        super().__init__(*args)
        CERTIFICATION_TALLY["violations"] += 1


# process-wide tally of bracket checks (counted per lambda) and raised violations
CERTIFICATION_TALLY = {"checks": 0, "violations": 0}


def certification_tally() -> dict[str, int]:
    return dict(CERTIFICATION_TALLY)


@dataclass(frozen=True)
class SolverOptions:
    """Knobs for the spectral solvers.

    Exactly one of ``n_target`` / ``lam_max`` is normally given. ``resolution``
    is the k-scan step in units of pi / (segment length).
    """

    n_target: int | None = None
    lam_max: float | None = None
    resolution: float = 0.25
    bisect_tol: float = 1e-13
    fem_h: float | None = None
    oracle_check: bool = False
    eigenfunctions: bool = True

    def __post_init__(self):
        if self.n_target is None and self.lam_max is None:
            raise ValueError("give n_target or lam_max")
        if self.n_target is not None and self.n_target < 1:
            raise ValueError("n_target must be >= 1")
        if self.lam_max is not None and not self.lam_max >= 0:
            raise ValueError("lam_max must be >= 0")
        if not 0 < self.resolution <= 0.5:
            raise ValueError("resolution must lie in (0, 1/2]")
        if not self.bisect_tol > 0:
            raise ValueError("bisect_tol must be > 0")
        if self.fem_h is not None and not self.fem_h > 0:
            raise ValueError("fem_h must be > 0")


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues (ascending, with multiplicity) and optional eigenfunctions.

    Eigenfunction n on edge e is ``A[n, e] c(t) + B[n, e] s(t)``, with (c, s)
    the fundamental system at energy ``eigenvalues[n]`` started at the edge
    tail (value and derivative at t = 0) and continued through the edge's
    potential cells.
    """

    eigenvalues: np.ndarray
    graph: MetricGraph
    coef_a: sparse.csc_array | None = None
    coef_b: sparse.csc_array | None = None
    multiplicity: np.ndarray | None = None
    residuals: np.ndarray | None = None
    method: str = ""
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.eigenvalues)

    @property
    def has_eigenfunctions(self) -> bool:
        return self.coef_a is not None

    def counting(self, lam):
        """Number of stored eigenvalues <= lam (up to COUNT_RTOL)."""
        lam = np.asarray(lam, dtype=float)
        return np.searchsorted(self.eigenvalues, lam + COUNT_RTOL * np.abs(lam), side="right")

    def values_at(self, x, n: int | None = None) -> np.ndarray:
        """f_1(x) .. f_n(x) for a path coordinate or GraphPoint ``x``."""
        if not self.has_eigenfunctions:
            raise ValueError("spectrum carries no eigenfunctions")
        n = len(self) if n is None else int(n)
        if not 0 <= n <= len(self):
            raise IndexError(f"n = {n} outside 0..{len(self)}")
        p = self.graph.locate(x)
        v = self.graph.vertex_at(p)
        if v is not None and isinstance(self.graph.vertices[v].condition, Dirichlet):
            return np.zeros(n)
        lam = self.eigenvalues[:n]
        A = self.coef_a[:, [p.edge]].toarray()[:n, 0]
        B = self.coef_b[:, [p.edge]].toarray()[:n, 0]
        e = self.graph.edges[p.edge]
        start = 0.0
        cells = e.potential.cells(e.length)
        for i, (ell, q) in enumerate(cells):
            last = i == len(cells) - 1
            if p.t <= start + ell or last:
                tau = min(max(p.t - start, 0.0), ell)
                if tau == 0.0:
                    return A.copy()
                a, b, _, _ = cell_entries(tau, lam - q)
                return A * a + B * b
            a, b, c, d = cell_entries(ell, lam - q)
            A, B = a * A + b * B, c * A + d * B
            start += ell
        raise AssertionError("unreachable")


def eigenfunction_value(spec: Spectrum, n: int, x) -> float:
    """Value of the n-th (1-based) normalized eigenfunction at ``x``."""
    if not 1 <= n <= len(spec):
        raise IndexError(f"eigenfunction index {n} outside 1..{len(spec)}")
    return float(spec.values_at(x, n)[n - 1])


def group_clusters(lam: np.ndarray, rtol: float = 1e-9) -> list[tuple[int, int]]:
    """[start, stop) index ranges of numerically coincident eigenvalues."""
    out = []
    i = 0
    while i < len(lam):
        j = i + 1
        while j < len(lam) and lam[j] - lam[j - 1] <= rtol * max(1.0, abs(lam[j])):
            j += 1
        out.append((i, j))
        i = j
    return out


def multiplicities(lam: np.ndarray, rtol: float = 1e-9) -> np.ndarray:
    mult = np.ones(len(lam), dtype=int)
    for i, j in group_clusters(lam, rtol):
        mult[i:j] = j - i
    return mult


def normalize_coefficients(graph: MetricGraph, lam: np.ndarray, A: np.ndarray, B: np.ndarray):
    """Scale rows of (A, B) to unit L^2 norm using closed-form cell integrals."""
    norm2 = gram_diagonal(graph, lam, A, B)
    scale = 1.0 / np.sqrt(norm2)
    return A * scale[:, None], B * scale[:, None]


def gram_diagonal(graph: MetricGraph, lam: np.ndarray, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """||f_n||^2 for all rows."""
    from .transfer import cell_integrals

    total = np.zeros(len(lam))
    for e_id, e in enumerate(graph.edges):
        a_ = A[:, e_id].copy()
        b_ = B[:, e_id].copy()
        for ell, q in e.potential.cells(e.length):
            icc, ics, iss = cell_integrals(ell, lam - q)
            total += a_ * a_ * icc + 2 * a_ * b_ * ics + b_ * b_ * iss
            a, b, c, d = cell_entries(ell, lam - q)
            a_, b_ = a * a_ + b * b_, c * a_ + d * b_
    return total


def gram_matrix(graph: MetricGraph, lam: float, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """L^2 Gram matrix of several coefficient rows sharing one eigenvalue."""
    from .transfer import cell_integrals

    m = A.shape[0]
    G = np.zeros((m, m))
    for e_id, e in enumerate(graph.edges):
        a_ = A[:, e_id].copy()
        b_ = B[:, e_id].copy()
        for ell, q in e.potential.cells(e.length):
            icc, ics, iss = (float(v) for v in cell_integrals(ell, np.array(lam - q)))
            G += icc * np.outer(a_, a_) + ics * (np.outer(a_, b_) + np.outer(b_, a_)) + iss * np.outer(b_, b_)
            a, b, c, d = (float(v) for v in cell_entries(ell, np.array(lam - q)))
            a_, b_ = a * a_ + b * b_, c * a_ + d * b_
    return G


def to_sparse(M: np.ndarray) -> sparse.csc_array:
    return sparse.csc_array(M)


def exact_harmonic_spectrum(M: int, n: int | None = None) -> Spectrum:
    """Closed-form Dirichlet eigendata of the first M harmonic cells.

    Cell m has length pi/m, eigenvalues (m j)^2 and normalized eigenfunctions
    sqrt(2 m / pi) sin(m j t). With ``n`` the n smallest are kept, otherwise
    everything below (M + 1)^2. ``meta["exact"]`` tells whether the kept
    eigenvalues coincide with those of the untruncated path, i.e. whether
    they all lie below the first eigenvalue (M + 1)^2 of the missing cells.
    """
    from ..graph import PathFamily, truncate_family

    g = truncate_family(PathFamily(kind="harmonic"), None, M)
    # products m j <= top: all of them if n is None, else enough for n (cell 1 alone has n)
    top = M if n is None else int(n)
    ms, js = [], []
    for m in range(1, M + 1):
        jmax = top // m
        if jmax < 1:
            break
        ms.append(np.full(jmax, m))
        js.append(np.arange(1, jmax + 1))
    m_all = np.concatenate(ms)
    k_all = (m_all * np.concatenate(js)).astype(float)
    order = np.lexsort((m_all, k_all))
    if n is not None:
        order = order[:n]
    m_all, k_all = m_all[order], k_all[order]
    lam = k_all**2
    rows = np.arange(len(lam))
    # f = B s(t) with s = sin(k t)/k, so B = k sqrt(2 m / pi)
    B = k_all * np.sqrt(2 * m_all / math.pi)
    shape = (len(lam), len(g.edges))
    coef_a = sparse.csc_array(shape)
    coef_b = sparse.csc_array((B, (rows, m_all - 1)), shape=shape)
    exact = bool(lam[-1] < (M + 1) ** 2)
    return Spectrum(lam, g, coef_a, coef_b, multiplicities(lam), np.zeros(len(lam)), "exact-harmonic", {"cells": M, "exact": exact})
