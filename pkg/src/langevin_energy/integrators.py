"""Numerical schemes for the kinetic-energy SDEs.

Ito form:           dK = (sigma^2/2m - 2 gamma K/m) dt + sqrt(2 sigma^2 K/m) dW
Stratonovich form:  dK = -2 gamma K/m dt + sqrt(2 sigma^2 K/m) o dW

The Ito equation is integrated with Euler-Maruyama, the Stratonovich one with
the Heun predictor-corrector.  Both use full truncation: the raw iterate is
carried unchanged while drift, diffusion and the reported energy all see its
positive part ``max(K, 0)``.  Resetting negative
iterates to zero instead would push mass away from the boundary at every
step and bias the Ito mean upward by O(sqrt(dt)).

Started at ``K = 0`` the Heun scheme stays at zero forever, which is one of
the (many) solutions of the Stratonovich equation; Euler-Maruyama leaves zero
at the first step.  A Heun iterate that overshoots below zero also freezes
there, since both coefficients vanish at ``K <= 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import DomainError, EnergyPath, LangevinParams, NoisePath, TimeGrid

SCHEMES = ("ito-em", "strat-heun")


@dataclass(frozen=True)
class SchemeConfig:
    scheme: str = "ito-em"
    negativity_policy: str = "clamp-to-zero"
    zero_threshold: float = 0.0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise DomainError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.negativity_policy != "clamp-to-zero":
            raise DomainError("only the clamp-to-zero negativity policy is supported")
        if self.zero_threshold < 0:
            raise DomainError("zero_threshold must be nonnegative")


def strat_drift(k, params: LangevinParams):
    return -2 * params.gamma * k / params.m


def ito_drift(k, params: LangevinParams):
    # written as Stratonovich drift + correction so the two agree bit for bit
    return strat_drift(k, params) + params.sigma**2 / (2 * params.m)


def diffusion(k, params: LangevinParams):
    return np.sqrt(2 * params.sigma**2 * np.maximum(k, 0) / params.m)


def drift_conversion(params: LangevinParams, k: float) -> float:
    """Formal Stratonovich-to-Ito drift correction ``b(k) b'(k) / 2``.

    For ``b(k) = sqrt(2 sigma^2 k / m)`` this is the constant ``sigma^2 / (2m)``
    whenever ``k > 0``.  At ``k = 0`` the derivative ``b'`` is unbounded and the
    conversion is not defined, so ``k <= 0`` raises.
    """
    if not k > 0:
        raise DomainError(
            f"drift conversion needs k > 0: the diffusion sqrt(k) is not differentiable at 0 (k={k})"
        )
    return params.sigma**2 / (2 * params.m)


def _check_k0(k0) -> np.ndarray:
    k0 = np.asarray(k0, dtype=float)
    if np.any(k0 < 0) or not np.all(np.isfinite(k0)):
        raise DomainError("initial energy must be finite and nonnegative")
    return k0


def ito_em_paths(k0, dW: np.ndarray, dt: float, params: LangevinParams) -> np.ndarray:
    """Euler-Maruyama with full truncation, vectorised over rows of ``dW``."""
    dW = np.atleast_2d(dW)
    k = np.broadcast_to(_check_k0(k0), dW.shape[:1]).astype(float)
    out = np.empty((dW.shape[0], dW.shape[1] + 1))
    out[:, 0] = k
    for i in range(dW.shape[1]):
        kp = np.maximum(k, 0.0)
        k = k + ito_drift(kp, params) * dt + diffusion(kp, params) * dW[:, i]
        out[:, i + 1] = np.maximum(k, 0.0)
    return out


def strat_heun_paths(k0, dW: np.ndarray, dt: float, params: LangevinParams) -> np.ndarray:
    """Stratonovich Heun with full truncation, vectorised over rows of ``dW``."""
    dW = np.atleast_2d(dW)
    k = np.broadcast_to(_check_k0(k0), dW.shape[:1]).astype(float)
    out = np.empty((dW.shape[0], dW.shape[1] + 1))
    out[:, 0] = k
    for i in range(dW.shape[1]):
        kp = np.maximum(k, 0.0)
        a, b = strat_drift(kp, params), diffusion(kp, params)
        pred = np.maximum(kp + a * dt + b * dW[:, i], 0.0)
        a_p, b_p = strat_drift(pred, params), diffusion(pred, params)
        k = k + 0.5 * (a + a_p) * dt + 0.5 * (b + b_p) * dW[:, i]
        out[:, i + 1] = np.maximum(k, 0.0)
    return out


def ito_em_path(k0: float, grid: TimeGrid, noise: NoisePath, params: LangevinParams) -> EnergyPath:
    noise.check_grid(grid)
    return EnergyPath(grid, ito_em_paths([k0], noise.increments, grid.dt, params)[0])


def strat_heun_path(k0: float, grid: TimeGrid, noise: NoisePath, params: LangevinParams) -> EnergyPath:
    noise.check_grid(grid)
    return EnergyPath(grid, strat_heun_paths([k0], noise.increments, grid.dt, params)[0])
