"""Zeros of Bessel functions J_nu for real order nu >= 0.

J_nu itself is evaluated with ``scipy.special.jv``. Zeros are bracketed by a
sign scan starting at ``x = nu`` (no zero lies below it) with a step shorter
than the smallest zero spacing, then polished by Newton iterations that fall
back to bisection whenever a step leaves the bracket.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import jv, jvp

# consecutive zeros of J_nu, nu >= 0, are more than 2.9 apart; j_{nu,1} > 2.4
_SCAN_STEP = 1.0
_MAX_NEWTON = 60


def mcmahon_zero(nu: float, n: int) -> float:
    """McMahon's large-n approximation to ``j_{nu,n}``."""
    beta = (n + nu / 2 - 0.25) * math.pi
    mu = 4.0 * nu * nu
    return (beta - (mu - 1) / (8 * beta)
            - 4 * (mu - 1) * (7 * mu - 31) / (3 * (8 * beta) ** 3))


def _refine(nu, a, b):
    """Polish zeros of J_nu inside the brackets ``[a_i, b_i]`` (vectorized)."""
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    fa = jv(nu, a)
    x = 0.5 * (a + b)
    active = np.ones(x.shape, dtype=bool)
    tol = 8 * np.finfo(float).eps
    for _ in range(_MAX_NEWTON):
        xa, aa, ba, faa = x[active], a[active], b[active], fa[active]
        fx = jv(nu, xa)
        step = fx / jvp(nu, xa)
        xn = xa - step
        converged = np.abs(step) <= tol * xa
        # shrink the bracket with the sign at x before choosing the next iterate
        same = np.signbit(fx) == np.signbit(faa)
        aa = np.where(same, xa, aa)
        faa = np.where(same, fx, faa)
        ba = np.where(same, ba, xa)
        outside = ~((xn > aa) & (xn < ba)) | ~np.isfinite(xn)
        xn = np.where(outside & ~converged, 0.5 * (aa + ba), xn)
        x[active], a[active], b[active], fa[active] = xn, aa, ba, faa
        active[np.flatnonzero(active)[converged]] = False
        if not active.any():
            break
    return x


def bessel_zeros_below(nu: float, xmax: float) -> np.ndarray:
    """All positive zeros of J_nu that are <= xmax, ascending."""
    if nu < 0:
        raise ValueError("order nu must be >= 0")
    start = max(nu, 0.5)
    if xmax <= start:
        return np.empty(0)
    grid = np.arange(start, xmax + _SCAN_STEP, _SCAN_STEP)
    f = jv(nu, grid)
    idx = np.nonzero(np.signbit(f[:-1]) != np.signbit(f[1:]))[0]
    if idx.size == 0:
        return np.empty(0)
    z = _refine(nu, grid[idx], grid[idx + 1])
    return z[z <= xmax]


def bessel_zeros(nu: float, count: int) -> np.ndarray:
    """The first ``count`` positive zeros ``j_{nu,1} < ... < j_{nu,count}``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    upper = max(nu, 0.5) + (count + 2) * math.pi
    while True:
        z = bessel_zeros_below(nu, upper)
        if z.size >= count:
            return z[:count]
        upper += (count - z.size + 2) * math.pi
