"""Regularized incomplete gamma functions and Pochhammer symbols."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 10_000


def _log_prefactor(a: float, x: float) -> float:
    return a * math.log(x) - x - math.lgamma(a)


def _lower_series(a: float, x: float) -> float:
    # P(a, x) = x^a e^-x / Gamma(a+1) * sum_n x^n / ((a+1)...(a+n))
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    else:
        raise ArithmeticError(f"incomplete gamma series did not converge for a={a}, x={x}")
    return total * math.exp(_log_prefactor(a, x))


def _upper_fraction(a: float, x: float) -> float:
    # modified Lentz evaluation of the continued fraction for Q(a, x)
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    else:
        raise ArithmeticError(f"incomplete gamma fraction did not converge for a={a}, x={x}")
    return h * math.exp(_log_prefactor(a, x))


def gamma_q(a: float, x: float) -> float:
    """Regularized upper incomplete gamma ``Gamma(a, x) / Gamma(a)``.

    Series for ``x < a + 1``, continued fraction otherwise, so the quantity being
    summed never suffers cancellation.
    """
    if a <= 0:
        raise ValueError("a must be positive")
    if x < 0:
        raise ValueError("x must be nonnegative")
    if x == 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < a + 1.0:
        return 1.0 - _lower_series(a, x)
    return _upper_fraction(a, x)


def gamma_p(a: float, x: float) -> float:
    """Regularized lower incomplete gamma ``1 - gamma_q(a, x)``, accurate when small."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x < 0:
        raise ValueError("x must be nonnegative")
    if x == 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < a + 1.0:
        return _lower_series(a, x)
    return 1.0 - _upper_fraction(a, x)


def upper_gamma(a: float, x: float) -> float:
    """Unregularized ``Gamma(a, x) = int_x^inf v^(a-1) e^-v dv``."""
    return gamma_q(a, x) * math.gamma(a)


def pochhammer(x, n):
    """Rising factorial ``Gamma(x + n) / Gamma(x)``; ``n`` may be non-integer."""
    x = np.asarray(x, dtype=float)
    n = np.asarray(n, dtype=float)
    if np.any(x <= 0) or np.any(x + n <= 0):
        raise ValueError("pochhammer needs x > 0 and x + n > 0")
    return np.exp(gammaln(x + n) - gammaln(x))[()]


def falling_factorial(x, l: int):
    """``x (x-1) ... (x-l+1)`` elementwise; exact on integer arrays."""
    x = np.asarray(x)
    out = np.ones(x.shape, dtype=float)
    for i in range(int(l)):
        out *= x - i
    return out[()]
