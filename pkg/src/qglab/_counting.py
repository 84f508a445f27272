"""Closed-form eigenvalue counts used both by the solvers and by the statistics."""

from __future__ import annotations

import math
from collections.abc import Sequence

import numpy as np

# relative slack for eigenvalues sitting exactly on lambda (pi * j / ell)^2 == lambda
_FLOOR_RTOL = 1e-12


def dirichlet_count_exact(lengths: Sequence[float], lam) -> np.ndarray | int:
    """Number of eigenvalues <= lam of the decoupled Dirichlet cells.

    sum_n floor(sqrt(lam) * L_n / pi); broadcasts over ``lam``.
    """
    ell = np.asarray(lengths, dtype=float)
    lam_arr = np.asarray(lam, dtype=float)
    if np.any(lam_arr < 0):
        raise ValueError("lam must be >= 0")
    k = np.sqrt(lam_arr)[..., None]
    x = k * ell / math.pi
    out = np.floor(x * (1 + _FLOOR_RTOL)).sum(axis=-1).astype(np.int64)
    return int(out) if np.ndim(lam) == 0 else out


def neumann_interval_count(L: float, lam) -> np.ndarray | int:
    """Number of eigenvalues <= lam of the Neumann interval of length L."""
    lam_arr = np.asarray(lam, dtype=float)
    out = np.where(lam_arr < 0, 0, np.floor(np.sqrt(np.maximum(lam_arr, 0)) * L / math.pi * (1 + _FLOOR_RTOL)) + 1)
    out = out.astype(np.int64)
    return int(out) if np.ndim(lam) == 0 else out


def dirichlet_k_for_count(lengths: Sequence[float], n: int) -> float:
    """Smallest k with dirichlet_count_exact(lengths, k^2) >= n."""
    ell = np.asarray(lengths, dtype=float)
    total = ell.sum()
    lo, hi = 0.0, math.pi * (n + len(ell)) / total
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if dirichlet_count_exact(ell, mid * mid) >= n:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 4 * np.finfo(float).eps * hi:
            break
    return hi


def harmonic_dirichlet_count(lam: float, M: int | None = None) -> int:
    """Eigenvalues <= lam of the Dirichlet cells pi/m (m <= M, all m if None).

    The cell of length pi/m has spectrum {(m j)^2}, so the count is
    sum_m floor(floor(sqrt(lam)) / m), done in integer arithmetic.
    """
    if lam < 0:
        raise ValueError("lam must be >= 0")
    s = math.isqrt(int(lam)) if float(lam).is_integer() else int(math.floor(math.sqrt(lam)))
    # guard the float sqrt branch
    while (s + 1) * (s + 1) <= lam:
        s += 1
    while s * s > lam:
        s -= 1
    top = s if M is None else min(M, s)
    if top <= 0:
        return 0
    m = np.arange(1, top + 1, dtype=np.int64)
    return int((s // m).sum())
