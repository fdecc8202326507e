"""Special functions for the detector's closed-form performance.

Regularized incomplete gamma functions use the power series below
``x = a + 1`` and the Legendre continued fraction (modified Lentz) above
it. Inverses are Newton iterations kept inside a bisection bracket.
"""
from __future__ import annotations

import math

from .errors import InvalidArgument

_EPS = 1e-15
_TINY = 1e-300
_MAX_ITER = 100_000
SQRT2 = math.sqrt(2.0)


def _log_prefactor(a: float, x: float) -> float:
    # log(x^a e^-x / Gamma(a))
    return a * math.log(x) - x - math.lgamma(a)


def _gamma_series(a: float, x: float) -> float:
    """Lower regularized P(a, x) by the power series."""
    if x == 0.0:
        return 0.0
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
        raise ArithmeticError(f"gamma series did not converge for a={a}, x={x}")
    return total * math.exp(_log_prefactor(a, x))


def _gamma_cf(a: float, x: float) -> float:
    """Upper regularized Q(a, x) by the continued fraction."""
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b if b != 0.0 else 1.0 / _TINY
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
        raise ArithmeticError(f"gamma continued fraction did not converge for a={a}, x={x}")
    return math.exp(_log_prefactor(a, x)) * h


def _check(a: float, x: float) -> None:
    if not a > 0.0 or math.isinf(a):
        raise InvalidArgument(f"shape a must be a positive finite number, got {a}")
    if not x >= 0.0:
        raise InvalidArgument(f"x must be nonnegative, got {x}")


def regularized_lower_gamma(a: float, x: float) -> float:
    """P(a, x) = gamma(a, x) / Gamma(a)."""
    _check(a, x)
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < a + 1.0:
        return min(1.0, _gamma_series(a, x))
    return max(0.0, 1.0 - _gamma_cf(a, x))


def regularized_upper_gamma(a: float, x: float) -> float:
    """Q(a, x) = 1 - P(a, x), evaluated without cancellation in the tail."""
    _check(a, x)
    if x == 0.0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < a + 1.0:
        return max(0.0, 1.0 - _gamma_series(a, x))
    return min(1.0, _gamma_cf(a, x))


def _gamma_log_density(a: float, x: float) -> float:
    return (a - 1.0) * math.log(x) - x - math.lgamma(a)


def _invert_gamma(a: float, y: float, upper: bool) -> float:
    # Wilson-Hilferty start, then safeguarded Newton on the CDF (or tail).
    p_lower = 1.0 - y if upper else y
    z = -q_function_inv(p_lower) if 0.0 < p_lower < 1.0 else 0.0
    x = a * (1.0 - 1.0 / (9.0 * a) + z / (3.0 * math.sqrt(a))) ** 3
    if not x > 0.0:
        x = 0.5 * a if a > 1.0 else 0.5
    lo, hi = 0.0, max(2.0 * x, a + 1.0)
    fn = regularized_upper_gamma if upper else regularized_lower_gamma
    sign = -1.0 if upper else 1.0
    while sign * (fn(a, hi) - y) < 0.0:
        lo = hi
        hi *= 2.0
    for _ in range(200):
        f = sign * (fn(a, x) - y)
        if f == 0.0:
            return x
        if f > 0.0:
            hi = min(hi, x)
        else:
            lo = max(lo, x)
        density = math.exp(_gamma_log_density(a, x))
        x_new = x - f / density if density > 0.0 else 0.5 * (lo + hi)
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= 1e-15 * max(1.0, x):
            return x_new
        x = x_new
    return x


def inverse_regularized_lower_gamma(a: float, y: float) -> float:
    """x such that P(a, x) = y."""
    if not a > 0.0:
        raise InvalidArgument(f"shape a must be positive, got {a}")
    if not 0.0 <= y <= 1.0:
        raise InvalidArgument(f"probability must lie in [0, 1], got {y}")
    if y == 0.0:
        return 0.0
    if y == 1.0:
        return math.inf
    return _invert_gamma(a, y, upper=False)


def inverse_regularized_upper_gamma(a: float, y: float) -> float:
    """x such that Q(a, x) = y; accurate for small tail probabilities."""
    if not a > 0.0:
        raise InvalidArgument(f"shape a must be positive, got {a}")
    if not 0.0 <= y <= 1.0:
        raise InvalidArgument(f"probability must lie in [0, 1], got {y}")
    if y == 1.0:
        return 0.0
    if y == 0.0:
        return math.inf
    return _invert_gamma(a, y, upper=True)


def q_function(x: float) -> float:
    """Standard normal upper tail probability."""
    return 0.5 * math.erfc(x / SQRT2)


def q_function_inv(y: float) -> float:
    """x such that Q(x) = y, for y in (0, 1)."""
    if not 0.0 < y < 1.0:
        raise InvalidArgument(f"Q-function inverse needs y in (0, 1), got {y}")
    if y == 0.5:
        return 0.0
    # Abramowitz & Stegun 26.2.23 start (|error| < 4.5e-4), Newton polish
    p = y if y < 0.5 else 1.0 - y
    t = math.sqrt(-2.0 * math.log(p))
    x = t - (2.515517 + 0.802853 * t + 0.010328 * t * t) / (
        1.0 + 1.432788 * t + 0.189269 * t * t + 0.001308 * t ** 3
    )
    if y > 0.5:
        x = -x
    for _ in range(50):
        density = math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
        step = (q_function(x) - y) / density
        x += step
        if abs(step) <= 1e-15 * max(1.0, abs(x)):
            break
    return x
