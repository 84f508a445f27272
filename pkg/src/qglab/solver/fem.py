"""Piecewise-linear finite elements for the quadratic form on a metric graph.

The discrete form is int |f'|^2 + int q |f|^2 + sum_v strength_v |f(v)|^2 on
continuous P1 functions; Dirichlet vertices drop their unknown. Used as an
independent oracle for the transfer-matrix solvers.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import linalg, sparse
from scipy.sparse import linalg as splinalg

from ..graph import Dirichlet, MetricGraph
from .spectrum import Spectrum, multiplicities

_DENSE_LIMIT = 2500


def _mesh(g: MetricGraph, h: float):
    """Element list (node_i, node_j, length, q) with vertex nodes first."""
    nv = len(g.vertices)
    elems = []
    nxt = nv
    for e in g.edges:
        cells = e.potential.cells(e.length)
        # at least 4 elements per edge
        counts = [max(1, math.ceil(ell / h)) for ell, _ in cells]
        while sum(counts) < 4:
            j = int(np.argmax([ell / c for (ell, _), c in zip(cells, counts)]))
            counts[j] += 1
        prev = e.tail
        total = sum(counts)
        done = 0
        for (ell, q), c in zip(cells, counts):
            he = ell / c
            for _ in range(c):
                done += 1
                if done == total:
                    node = e.head
                else:
                    node = nxt
                    nxt += 1
                elems.append((prev, node, he, q))
                prev = node
    return nxt, elems


def assemble(g: MetricGraph, h: float):
    """Stiffness-plus-coupling matrix K, mass matrix M and kept dof indices."""
    n_nodes, elems = _mesh(g, h)
    el = np.array(elems, dtype=float)
    i = el[:, 0].astype(int)
    j = el[:, 1].astype(int)
    he = el[:, 2]
    q = el[:, 3]
    kd = 1.0 / he + q * he / 3
    ko = -1.0 / he + q * he / 6
    md = he / 3
    mo = he / 6
    rows = np.concatenate([i, j, i, j])
    cols = np.concatenate([i, j, j, i])
    K = sparse.coo_array((np.concatenate([kd, kd, ko, ko]), (rows, cols)), shape=(n_nodes, n_nodes)).tocsr()
    M = sparse.coo_array((np.concatenate([md, md, mo, mo]), (rows, cols)), shape=(n_nodes, n_nodes)).tocsr()
    strengths = np.zeros(n_nodes)
    keep = np.ones(n_nodes, dtype=bool)
    for v, c in enumerate(g.conditions):
        if isinstance(c, Dirichlet):
            keep[v] = False
        else:
            strengths[v] = c.strength
    K = K + sparse.diags_array(strengths)
    idx = np.nonzero(keep)[0]
    return K[idx][:, idx], M[idx][:, idx], idx


def fem_oracle(g: MetricGraph, h: float, N: int) -> Spectrum:
    """First N eigenvalues of the P1 discretization with mesh size <= h."""
    if not h > 0:
        raise ValueError("mesh size must be > 0")
    K, M, idx = assemble(g, h)
    ndof = K.shape[0]
    if N < 1:
        raise ValueError("N must be >= 1")
    if ndof < 2 * N:
        raise ValueError(f"mesh too coarse: {ndof} unknowns for {N} eigenvalues (need >= {2 * N})")
    if ndof <= _DENSE_LIMIT:
        lam = linalg.eigh(K.toarray(), M.toarray(), eigvals_only=True, subset_by_index=[0, N - 1])
    else:
        lam = splinalg.eigsh(K.tocsc(), k=N, M=M.tocsc(), sigma=-1.0, which="LM", return_eigenvectors=False)
    lam = np.sort(lam)
    return Spectrum(lam, g, None, None, multiplicities(lam, 1e-8), None, "fem-p1", {"h": h, "dofs": ndof})


def default_mesh(g: MetricGraph, N: int) -> float:
    """Mesh size giving roughly 1e-6 relative accuracy after one Richardson step."""
    k = math.pi * (N + len(g.vertices)) / g.total_length
    k = math.sqrt(k * k + g.max_potential)
    return min(0.1 / max(k, 1.0), g.min_cell_length / 4)


def fem_extrapolated(g: MetricGraph, N: int, h: float | None = None) -> Spectrum:
    """Richardson combination (4 lam_{h/2} - lam_h) / 3 of two nested meshes."""
    h = default_mesh(g, N) if h is None else h
    coarse = fem_oracle(g, h, N)
    fine = fem_oracle(g, h / 2, N)
    lam = (4 * fine.eigenvalues - coarse.eigenvalues) / 3
    meta = {"h": h, "coarse": coarse.eigenvalues, "fine": fine.eigenvalues}
    return Spectrum(lam, g, None, None, multiplicities(lam, 1e-8), None, "fem-richardson", meta)
