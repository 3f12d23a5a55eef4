"""Dawson integrals, their antiderivative, the normal CDF and 2F2(1,1;3/2,2;x).

    D+(x) = exp(-x**2) * int_0^x exp(u**2) du
    D-(x) = exp(x**2)  * int_0^x exp(-u**2) du = sqrt(pi)/2 * exp(x**2) * erf(x)

D+ is scipy's ``dawsn``.  D- has the closed erf form above and is guarded at
``|x| <= 26`` where ``exp(x**2)`` still fits in a double.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import integrate, special

from .model import DomainError, RangeError

DAWSON_MINUS_MAX = 26.0
HYP2F2_MAX = 500.0
SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_subdivisions: int = 2000

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise DomainError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be >= 1")


DEFAULT_QUADRATURE = QuadratureConfig()
# tighter than the default so antiderivative errors stay far below 1e-8
_TIGHT = QuadratureConfig(abs_tol=1e-14, rel_tol=1e-13)


def _finite(x: float) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"argument must be finite, got {x!r}")
    return x


def dawson_plus(x: float) -> float:
    return float(special.dawsn(_finite(x)))


def dawson_minus(x: float) -> float:
    x = _finite(x)
    if abs(x) > DAWSON_MINUS_MAX:
        raise RangeError(f"dawson_minus: |x| = {abs(x)} exceeds {DAWSON_MINUS_MAX}")
    return 0.5 * SQRT_PI * math.exp(x * x) * math.erf(x)


def integral_dawson_minus(x: float, quad: QuadratureConfig = _TIGHT) -> float:
    """``int_0^x D-(w) dw`` for ``0 <= x <= 26`` by adaptive quadrature."""
    x = _finite(x)
    if x < 0:
        raise DomainError(f"integral_dawson_minus needs x >= 0, got {x}")
    if x > DAWSON_MINUS_MAX:
        raise RangeError(f"integral_dawson_minus: x = {x} exceeds {DAWSON_MINUS_MAX}")
    if x == 0:
        return 0.0
    value, _ = integrate.quad(
        dawson_minus, 0.0, x, epsabs=quad.abs_tol, epsrel=quad.rel_tol, limit=quad.max_subdivisions
    )
    return value


def integral_erfcx(x: float, quad: QuadratureConfig = _TIGHT) -> float:
    """``int_0^x erfcx(w) dw`` for ``x >= 0``; positive integrand, no cancellation."""
    x = _finite(x)
    if x < 0:
        raise DomainError(f"integral_erfcx needs x >= 0, got {x}")
    if x == 0:
        return 0.0
    value, _ = integrate.quad(
        special.erfcx, 0.0, x, epsabs=quad.abs_tol, epsrel=quad.rel_tol, limit=quad.max_subdivisions
    )
    return value


def normal_cdf(x: float) -> float:
    return float(special.ndtr(_finite(x)))


def hyp2f2(x: float, rel_tol: float = 1e-17) -> float:
    """Generalized hypergeometric 2F2(1, 1; 3/2, 2; x) for ``0 <= x <= 500``.

    With ``(1)_n = n!`` and ``(2)_n = (n+1)!`` the n-th term reduces to
    ``x**n / ((3/2)_n (n + 1))``, so consecutive terms satisfy
    ``t[n+1] = t[n] * x * (n + 1) / ((n + 3/2) (n + 2))``.  All terms are
    positive; the sum stops once a term no longer moves it.
    """
    x = _finite(x)
    if not 0 <= x <= HYP2F2_MAX:
        raise RangeError(f"hyp2f2: x = {x} outside [0, {HYP2F2_MAX}]")
    total = term = 1.0
    n = 0
    while True:
        term *= x * (n + 1) / ((n + 1.5) * (n + 2))
        total += term
        n += 1
        # past the peak of the terms (n > x) the tail is bounded geometrically
        if n > x and term <= rel_tol * total:
            return total
