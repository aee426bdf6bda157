"""Deterministic quadrature: adaptive Simpson and normal-rectangle oracles.

The bivariate normal CDF uses the correlation-integral identity obtained
from Plackett's partial differential equation,

    Phi2(h, k, rho) = Phi(h) Phi(k)
        + (1/2pi) * int_0^rho exp(-(h^2 + k^2 - 2 h k r) / (2 (1 - r^2)))
                              / sqrt(1 - r^2) dr,

and the trivariate rectangle adds one adaptive conditioning layer over the
third coordinate.  Everything here is scalar and allocation-free so it can
sit inside nested integration layers.
"""

from __future__ import annotations

import math
from typing import Callable, Iterable

_SQRT2 = math.sqrt(2.0)
_INV_2PI = 1.0 / (2.0 * math.pi)

#: standard-normal mass beyond this point is below 1e-17
Z_CUT = 8.5


def norm_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) * 0.3989422804014327


def norm_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / _SQRT2)


def norm_sf(x: float) -> float:
    return 0.5 * math.erfc(x / _SQRT2)


def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float,
    max_depth: int = 48,
    points: Iterable[float] | None = None,
) -> tuple[float, float]:
    """Integrate ``f`` over [a, b] with a step-halving Richardson estimate.

    Returns ``(value, err_bound)``.  ``points`` seeds extra breakpoints
    (useful for boundary layers); tolerance is split across the resulting
    segments proportionally to their share of the interval.
    """
    if a == b:
        return 0.0, 0.0
    sign = 1.0
    if a > b:
        a, b, sign = b, a, -1.0
    cuts = [a, b]
    if points:
        cuts.extend(p for p in points if a < p < b)
    cuts = sorted(set(cuts))
    total = 0.0
    err = 0.0
    span = b - a
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        seg_tol = tol * (hi - lo) / span
        v, e = _simpson_segment(f, lo, hi, seg_tol, max_depth)
        total += v
        err += e
    return sign * total, err


def _simpson_segment(f, a, b, tol, max_depth):
    m = 0.5 * (a + b)
    fa, fm, fb = f(a), f(m), f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return _simpson_rec(f, a, fa, m, fm, b, fb, whole, tol, max_depth)


def _simpson_rec(f, a, fa, m, fm, b, fb, whole, tol, depth):
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    delta = left + right - whole
    if depth <= 0 or abs(delta) <= 15.0 * tol:
        return left + right + delta / 15.0, abs(delta) / 15.0
    lv, le = _simpson_rec(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1)
    rv, re = _simpson_rec(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1)
    return lv + rv, le + re


def phi2(h: float, k: float, rho: float, tol: float = 1e-10) -> float:
    """Bivariate normal CDF P(X <= h, Y <= k) with correlation rho."""
    if h == -math.inf or k == -math.inf:
        return 0.0
    if h == math.inf:
        return norm_cdf(k)
    if k == math.inf:
        return norm_cdf(h)
    if rho == 0.0:
        return norm_cdf(h) * norm_cdf(k)
    if rho >= 1.0 - 1e-14:
        return norm_cdf(min(h, k))
    if rho <= -1.0 + 1e-14:
        return max(0.0, norm_cdf(h) + norm_cdf(k) - 1.0)
    hk2 = h * h + k * k
    two_hk = 2.0 * h * k

    def integrand(r):
        om = 1.0 - r * r
        return math.exp(-(hk2 - two_hk * r) / (2.0 * om)) / math.sqrt(om)

    corr, _ = adaptive_simpson(integrand, 0.0, rho, tol)
    val = norm_cdf(h) * norm_cdf(k) + _INV_2PI * corr
    return min(1.0, max(0.0, val))


def rect2(l1: float, u1: float, l2: float, u2: float, rho: float, tol: float = 1e-10) -> float:
    """P(l1 < X <= u1, l2 < Y <= u2) for a correlated standard normal pair."""
    val = (
        phi2(u1, u2, rho, tol)
        - phi2(l1, u2, rho, tol)
        - phi2(u1, l2, rho, tol)
        + phi2(l1, l2, rho, tol)
    )
    return min(1.0, max(0.0, val))


def rect3(
    lower: tuple[float, float, float],
    upper: tuple[float, float, float],
    r12: float,
    r13: float,
    r23: float,
    tol: float = 1e-8,
) -> tuple[float, float]:
    """Trivariate normal rectangle probability via conditioning on X3.

    Returns ``(value, err_bound)``; the inner bivariate rectangle is the
    conditional law given X3 = z, integrated adaptively over z.
    """
    l3 = max(lower[2], -Z_CUT)
    u3 = min(upper[2], Z_CUT)
    if l3 >= u3:
        return 0.0, 0.0
    s1 = math.sqrt(max(1e-14, 1.0 - r13 * r13))
    s2 = math.sqrt(max(1e-14, 1.0 - r23 * r23))
    rc = (r12 - r13 * r23) / (s1 * s2)
    rc = max(-1.0, min(1.0, rc))
    inner_tol = max(1e-13, tol * 1e-3)

    def integrand(z):
        a1 = (lower[0] - r13 * z) / s1
        b1 = (upper[0] - r13 * z) / s1
        a2 = (lower[1] - r23 * z) / s2
        b2 = (upper[1] - r23 * z) / s2
        return norm_pdf(z) * rect2(a1, b1, a2, b2, rc, inner_tol)

    val, err = adaptive_simpson(integrand, l3, u3, tol, points=[0.0] if l3 < 0.0 < u3 else None)
    return min(1.0, max(0.0, val)), err
