"""Student-t tail quantiles, computed from first principles.

The outlier channel needs t quantiles for its residual confidence bounds.  To
keep results bit-stable across platforms the quantile is obtained by numeric
inversion (bisection) of the t CDF, which is itself evaluated through the
regularized incomplete beta function (continued fraction, Lentz's method).
No lookup tables and no external stats dependency.
"""

from __future__ import annotations

import math
from functools import lru_cache

_MAX_CF_ITER = 300
_CF_EPS = 1e-16
_CF_TINY = 1e-300
_BISECT_TOL = 1e-10


def _log_beta(a: float, b: float) -> float:
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def _beta_cf(x: float, a: float, b: float) -> float:
    # Continued fraction for the incomplete beta, modified Lentz method.
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_CF_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    return h


def betainc_regularized(x: float, a: float, b: float) -> float:
    """Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0 or b <= 0:
        raise ValueError("betainc_regularized requires a > 0 and b > 0")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = a * math.log(x) + b * math.log1p(-x) - _log_beta(a, b)
    front = math.exp(ln_front)
    # Use the symmetry relation on the side where the fraction converges fast.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(x, a, b) / a
    return 1.0 - front * _beta_cf(1.0 - x, b, a) / b


def student_t_cdf(t: float, dof: float) -> float:
    """CDF of Student's t with ``dof`` degrees of freedom."""
    if dof <= 0:
        raise ValueError("degrees of freedom must be positive")
    if t == 0.0:
        return 0.5
    z = dof / (dof + t * t)
    half_tail = 0.5 * betainc_regularized(z, 0.5 * dof, 0.5)
    return 1.0 - half_tail if t > 0 else half_tail


@lru_cache(maxsize=4096)
def student_t_quantile(p: float, dof: float) -> float:
    """Inverse CDF of Student's t, bisected to 1e-10.

    Only the quantile itself is cached; callers hit a small set of
    (alpha, window) pairs repeatedly.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile level must lie in (0, 1), got {p}")
    if dof <= 0:
        raise ValueError("degrees of freedom must be positive")
    if p == 0.5:
        return 0.0
    if p < 0.5:
        return -student_t_quantile(1.0 - p, dof)
    lo, hi = 0.0, 2.0
    while student_t_cdf(hi, dof) < p:
        hi *= 2.0
        if hi > 1e12:
            raise ValueError(f"t quantile out of range for p={p}, dof={dof}")
    while hi - lo > _BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if student_t_cdf(mid, dof) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
