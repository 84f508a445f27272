"""2x2 transfer matrices propagating (f, f') at fixed energy.

All functions broadcast over array-valued ``lam``; the matrix index pair is
the trailing axes, so ``transfer_free(ell, lam_array)`` has shape
``lam.shape + (2, 2)``.
"""

from __future__ import annotations

import math

import numpy as np

# |k| * ell below this switches to the Taylor forms
SERIES_CUTOFF = 1e-4


def _cs(w):
    """C(w) = cos(sqrt(w)) and S(w) = sin(sqrt(w))/sqrt(w), analytic in w.

    Hyperbolic for w < 0; Taylor series for |w| < SERIES_CUTOFF**2.
    """
    w = np.asarray(w, dtype=float)
    C = np.empty_like(w)
    S = np.empty_like(w)
    small = np.abs(w) < SERIES_CUTOFF**2
    pos = (w > 0) & ~small
    neg = (w < 0) & ~small
    if np.any(small):
        ws = w[small]
        C[small] = 1 - ws / 2 * (1 - ws / 12 * (1 - ws / 30))
        S[small] = 1 - ws / 6 * (1 - ws / 20 * (1 - ws / 42))
    if np.any(pos):
        r = np.sqrt(w[pos])
        C[pos] = np.cos(r)
        S[pos] = np.sin(r) / r
    if np.any(neg):
        r = np.sqrt(-w[neg])
        C[neg] = np.cosh(r)
        S[neg] = np.sinh(r) / r
    return C, S


def cell_entries(ell: float, kappa2):
    """Entries (a, b, c, d) of the cell matrix for f'' = -kappa2 f over length ``ell``."""
    kappa2 = np.asarray(kappa2, dtype=float)
    C, S = _cs(kappa2 * ell * ell)
    b = ell * S
    return C, b, -kappa2 * b, C


def _stack(a, b, c, d):
    return np.stack([np.stack([a, b], axis=-1), np.stack([c, d], axis=-1)], axis=-2)


def transfer_free(ell: float, lam) -> np.ndarray:
    """Propagator of -f'' = lam f across a potential-free segment of length ``ell``.

    [[cos k ell, sin(k ell)/k], [-k sin k ell, cos k ell]] for lam = k^2 > 0,
    [[1, ell], [0, 1]] at lam = 0 and the hyperbolic counterpart below zero.
    """
    if not ell > 0:
        raise ValueError("segment length must be positive")
    return _stack(*cell_entries(ell, lam))


def transfer_const_potential(ell: float, lam, q0: float) -> np.ndarray:
    """Propagator of -f'' + q0 f = lam f; ``transfer_free`` at energy lam - q0."""
    if not ell > 0:
        raise ValueError("segment length must be positive")
    return _stack(*cell_entries(ell, np.asarray(lam, dtype=float) - q0))


def transfer_delta(sigma: float) -> np.ndarray:
    """Point interaction: value continuous, derivative jumps by sigma * f."""
    if not sigma >= 0 or not math.isfinite(sigma):
        raise ValueError("delta strength must be finite and >= 0")
    return np.array([[1.0, 0.0], [float(sigma), 1.0]])


def cell_integrals(ell: float, kappa2):
    """Closed-form integrals over one cell of the fundamental system c, s.

    Returns (int c^2, int c s, int s^2) over [0, ell], with c(0)=1, c'(0)=0,
    s(0)=0, s'(0)=1 for f'' = -kappa2 f.
    """
    kappa2 = np.asarray(kappa2, dtype=float)
    w = kappa2 * ell * ell  # (kappa ell)^2, signed
    C2, S2 = _cs(4 * w)  # cos(2 kappa ell), sin(2 kappa ell)/(2 kappa ell)
    C1, S1 = _cs(w)
    # int c s = sin^2(kappa ell) / (2 kappa^2) = ell^2 S1^2 / 2
    ics = 0.5 * ell * ell * S1 * S1
    # int c^2 = ell/2 (1 + S2), int s^2 = ell/(2 kappa^2) (1 - S2)
    icc = 0.5 * ell * (1 + S2)
    # (1 - S2)/w needs a series for small |w| : 1 - sin u/u = u^2/6 - u^4/120 + u^6/5040, u^2 = 4 w
    u2 = 4 * w
    small = np.abs(u2) < 1e-2
    one_minus = np.empty_like(w)
    if np.any(small):
        us = u2[small]
        one_minus[small] = (1 / 6 - us / 120 + us * us / 5040 - us**3 / 362880) * 4
    big = ~small
    if np.any(big):
        one_minus[big] = (1 - S2[big]) / w[big]
    iss = 0.5 * ell**3 * one_minus
    return icc, ics, iss
