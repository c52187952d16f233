"""Gamma-function helpers and modified Bessel functions of the second kind.

``gamma_ratio`` is the single evaluator behind every quotient of gamma
functions in the package.  It treats poles of the denominator as zeros of the
reciprocal gamma function, which is how the vanishing spectral values
(constants in the kernel of the Paneitz operator, the range of the Ahlfors
operator in the universal Hessian) come out exactly 0.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import special

from .errors import DomainError, ParameterError

# math.gamma overflows just above 171
_DIRECT_GAMMA_LIMIT = 170.0
_MAX_RECURRENCE_STEPS = 64


def is_nonpositive_integer(x: float) -> bool:
    return x <= 0 and float(x).is_integer()


def log_gamma(x: float) -> float:
    """log Gamma(x) for x > 0."""
    x = float(x)
    if not x > 0:
        raise DomainError(f"log_gamma requires x > 0, got {x}")
    return math.lgamma(x)


def _gamma_sign(x: float) -> int:
    if x > 0:
        return 1
    return 1 if math.floor(x) % 2 == 0 else -1


def gamma_ratio(a: float, b: float) -> float:
    """Gamma(a) / Gamma(b) with exact zeros at poles of Gamma(b).

    Raises ParameterError when ``a`` sits on a pole and ``b`` does not (the
    ratio is infinite) and when both sit on poles (no formula in scope needs a
    regularized value there).
    """
    a, b = float(a), float(b)
    a_pole, b_pole = is_nonpositive_integer(a), is_nonpositive_integer(b)
    if a_pole and b_pole:
        raise ParameterError(f"gamma_ratio({a}, {b}): both arguments are poles")
    if a_pole:
        raise ParameterError(f"gamma_ratio({a}, {b}): pole of the numerator")
    if b_pole:
        return 0.0
    if abs(a) < _DIRECT_GAMMA_LIMIT and abs(b) < _DIRECT_GAMMA_LIMIT:
        try:
            return math.gamma(a) / math.gamma(b)
        except OverflowError:  # subnormal arguments
            pass
    shift = a - b
    if shift.is_integer() and abs(shift) <= _MAX_RECURRENCE_STEPS:
        # Gamma(b + m) / Gamma(b) as a rising product keeps full precision
        lo, m = (b, int(shift)) if shift >= 0 else (a, int(-shift))
        prod = 1.0
        for j in range(m):
            prod *= lo + j
        return prod if shift >= 0 else 1.0 / prod
    sign = _gamma_sign(a) * _gamma_sign(b)
    return sign * math.exp(math.lgamma(a) - math.lgamma(b))


def bessel_k(nu, x):
    """Modified Bessel function of the second kind K_nu(x), x > 0.

    K is even in the order, so negative ``nu`` is folded onto ``|nu|``.
    Accepts scalars or arrays for ``x``.
    """
    x_arr = np.asarray(x, dtype=float)
    if np.any(~(x_arr > 0)):
        raise DomainError("bessel_k requires x > 0")
    nu = abs(float(nu))
    if nu < 1e-8:
        nu = 0.0  # K_nu = K_0 (1 + O(nu^2)); kv returns nan for subnormal orders
    out = special.kv(nu, x_arr)
    return float(out) if out.ndim == 0 else out


def sphere_volume(n: int) -> float:
    """Surface measure of the unit sphere S^n in R^{n+1}.

    S^0 is two points and has volume 2.
    """
    if n < 0:
        raise DomainError(f"sphere dimension must be >= 0, got {n}")
    return 2.0 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)
