"""Mean first passage time of the kinetic energy (equivalently the velocity) to zero.

With ``y = sqrt(m gamma) |v| / sigma`` the passage time is

    T(v) = (m sqrt(pi) / gamma) exp(y**2) D+(y) - (2m / gamma) int_0^y D-(w) dw.

Both terms grow like ``exp(y**2)`` and cancel, so beyond ``y = 2.5`` the value is
taken from the equivalent cancellation-free form

    T(v) = (m sqrt(pi) / gamma) int_0^y erfcx(w) dw,

which follows from ``d/dy [exp(y**2) D+(y)] = exp(y**2)`` and
``D-(w) = sqrt(pi)/2 exp(w**2) erf(w)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import integrate, special

from . import specfun
from .model import DomainError, LangevinParams, RangeError

#: Largest scaled argument accepted (the D- overflow guard).
MAX_ARGUMENT = specfun.DAWSON_MINUS_MAX
_DIRECT_LIMIT = 2.5


@dataclass(frozen=True)
class MfptResult:
    value: float
    input: float
    kind: str  # "velocity" or "energy"
    params: LangevinParams


def scaled_argument(v: float, params: LangevinParams) -> float:
    return math.sqrt(params.m * params.gamma) * abs(v) / params.sigma


def _mfpt_scaled(y: float, params: LangevinParams) -> float:
    if y > MAX_ARGUMENT:
        raise RangeError(f"scaled argument {y:.6g} exceeds {MAX_ARGUMENT}")
    if y == 0:
        return 0.0
    tau = params.m / params.gamma
    if y <= _DIRECT_LIMIT:
        return tau * (
            specfun.SQRT_PI * math.exp(y * y) * specfun.dawson_plus(y) - 2 * specfun.integral_dawson_minus(y)
        )
    return tau * specfun.SQRT_PI * specfun.integral_erfcx(y)


def mfpt_velocity(v: float, params: LangevinParams) -> float:
    """Mean time for a particle starting at velocity ``v`` to first reach ``V = 0``."""
    if not math.isfinite(v):
        raise DomainError(f"v must be finite, got {v!r}")
    return _mfpt_scaled(scaled_argument(v, params), params)


def mfpt_energy(K: float, params: LangevinParams) -> float:
    """Mean time for the kinetic energy to first reach zero from ``K``."""
    if not (math.isfinite(K) and K >= 0):
        raise DomainError(f"K must be finite and nonnegative, got {K!r}")
    y = math.sqrt(2 * params.gamma) / params.sigma * math.sqrt(K)
    return _mfpt_scaled(y, params)


def _finite_boundary_scaled(y: float, y_wall: float) -> float:
    """``T_M`` in units of ``m/gamma`` for scaled start ``y`` and wall ``y_wall``.

    ``exp(-y_wall**2) D-(y_wall) = sqrt(pi)/2 erf(y_wall)`` keeps the wall term
    finite for any ``M``; ``int_0^y exp(w**2) dw = exp(y**2) D+(y)``.
    """
    if y == 0:
        return 0.0
    wall = math.erf(y_wall)
    if y <= _DIRECT_LIMIT:
        first = specfun.SQRT_PI * wall * math.exp(y * y) * specfun.dawson_plus(y)
        return first - 2 * specfun.integral_dawson_minus(y)
    tail = math.erfc(y_wall)
    value, _ = integrate.quad(
        lambda w: special.erfcx(w) - math.exp(w * w) * tail, 0.0, y, epsabs=1e-14, epsrel=1e-13, limit=2000
    )
    return specfun.SQRT_PI * value


def mfpt_finite_boundary(v: float, M: float, params: LangevinParams) -> float:
    """Passage time to zero with a reflecting wall at velocity ``M``.

    ``v`` must lie between 0 and ``M``.  Increases towards
    :func:`mfpt_velocity` as ``|M|`` grows.
    """
    if M == 0 or not math.isfinite(M):
        raise DomainError("M must be finite and nonzero")
    if not (0 <= v <= M or M <= v <= 0):
        raise DomainError(f"v = {v} must lie between 0 and M = {M}")
    y = scaled_argument(v, params)
    if y > MAX_ARGUMENT:
        raise RangeError(f"scaled argument {y:.6g} exceeds {MAX_ARGUMENT}")
    return params.m / params.gamma * _finite_boundary_scaled(y, scaled_argument(M, params))


def mfpt_ode_residual(v: float, params: LangevinParams, h: float) -> float:
    """Central-difference residual of ``sigma^2/(2m) T'' - gamma v T' + m = 0``."""
    if not h > 0:
        raise DomainError("h must be positive")
    lo, mid, hi = (mfpt_velocity(v + s, params) for s in (-h, 0.0, h))
    d1 = (hi - lo) / (2 * h)
    d2 = (hi - 2 * mid + lo) / (h * h)
    return params.sigma**2 / (2 * params.m) * d2 - params.gamma * v * d1 + params.m
