"""Exact sampling of the Ornstein-Uhlenbeck velocity and the kinetic energy.

One grid step of ``m dV = -gamma V dt + sigma dW`` is the Gaussian transition

    V' = exp(-(gamma/m) dt) V + sqrt(sigma**2/(2 m gamma) (1 - exp(-2 (gamma/m) dt))) Z

which is exact in law for any ``dt``.  Paths take ``Z = dW / sqrt(dt)`` from
their ``NoisePath`` so that the same increments can also drive the SDE
integrators.

Coupling.  The energy equations carry the diffusion ``sqrt(2 sigma**2 K / m)
= sigma |V|``, i.e. ``K = m V**2 / 2`` solves them for the Brownian motion
``B = int sgn(V) dW`` rather than ``W`` itself.  The default ``"energy"``
coupling therefore feeds ``sgn(V_i) * Z_i`` into the transition.  Since
``sgn(V_i) Z_i`` is again a standard normal independent of the past, the law
of the path is unchanged, while ``K`` becomes pathwise comparable with the
energy SDEs driven by the same ``dW``.  ``"velocity"`` is the plain recursion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import DomainError, EnergyPath, LangevinParams, NoisePath, TimeGrid, VelocityPath

COUPLINGS = ("energy", "velocity")


@dataclass(frozen=True)
class InitialCondition:
    """Deterministic ``V0 = v0`` or Gaussian ``V0 ~ N(v0_mean, v0_std**2)``."""

    kind: str = "deterministic"
    v0: float = 0.0
    v0_mean: float = 0.0
    v0_std: float = 0.0

    def __post_init__(self):
        if self.kind not in ("deterministic", "gaussian"):
            raise DomainError(f"unknown initial condition kind {self.kind!r}")
        for name in ("v0", "v0_mean", "v0_std"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if self.v0_std < 0:
            raise DomainError("v0_std must be nonnegative")

    @classmethod
    def deterministic(cls, v0: float) -> InitialCondition:
        return cls("deterministic", v0=float(v0))

    @classmethod
    def gaussian(cls, mean: float, std: float) -> InitialCondition:
        return cls("gaussian", v0_mean=float(mean), v0_std=float(std))

    @classmethod
    def stationary(cls, params: LangevinParams) -> InitialCondition:
        """Maxwell-Boltzmann velocity ``N(0, sigma**2 / (2 m gamma))``."""
        return cls.gaussian(0.0, math.sqrt(params.stationary_velocity_variance))

    @classmethod
    def from_energy(cls, k0: float, m: float) -> InitialCondition:
        """Deterministic nonnegative velocity carrying kinetic energy ``k0``."""
        if k0 < 0:
            raise DomainError(f"initial energy must be nonnegative, got {k0}")
        return cls.deterministic(math.sqrt(2 * k0 / m))

    @property
    def ev0_sq(self) -> float:
        """``E[V0**2]``, analytically."""
        if self.kind == "deterministic":
            return self.v0**2
        return self.v0_mean**2 + self.v0_std**2

    def sample(self, z0):
        """Initial velocity from standard normal draw(s) ``z0``."""
        if self.kind == "deterministic":
            return np.full_like(np.asarray(z0, dtype=float), self.v0)
        return self.v0_mean + self.v0_std * np.asarray(z0, dtype=float)


def transition_coefficients(dt: float, params: LangevinParams) -> tuple[float, float]:
    """Decay factor and noise scale of the exact one-step transition."""
    if dt < 0:
        raise DomainError(f"dt must be nonnegative, got {dt}")
    rate = params.gamma / params.m
    decay = math.exp(-rate * dt)
    scale = math.sqrt(params.stationary_velocity_variance * -math.expm1(-2 * rate * dt))
    return decay, scale


def ou_exact_step(v, dt: float, params: LangevinParams, z):
    """Exact OU transition of ``v`` over ``dt`` using standard normal ``z``."""
    decay, scale = transition_coefficients(dt, params)
    return decay * v + scale * z


def exact_velocity_paths(v0, dW: np.ndarray, dt: float, params: LangevinParams, coupling: str = "energy"):
    """Vectorised exact recursion.

    ``v0`` has shape ``(n,)`` and ``dW`` shape ``(n, n_steps)``; returns
    ``(n, n_steps + 1)`` velocities.
    """
    if coupling not in COUPLINGS:
        raise DomainError(f"coupling must be one of {COUPLINGS}, got {coupling!r}")
    dW = np.atleast_2d(dW)
    decay, scale = transition_coefficients(dt, params)
    z = dW / math.sqrt(dt)
    out = np.empty((dW.shape[0], dW.shape[1] + 1))
    out[:, 0] = v0
    v = out[:, 0].copy()
    for i in range(dW.shape[1]):
        zi = z[:, i]
        if coupling == "energy":
            zi = np.where(v >= 0, zi, -zi)
        v = decay * v + scale * zi
        out[:, i + 1] = v
    return out


def exact_velocity_path(
    ic: InitialCondition, grid: TimeGrid, noise: NoisePath, params: LangevinParams, coupling: str = "energy"
) -> VelocityPath:
    noise.check_grid(grid)
    v0 = ic.sample([noise.z0])
    values = exact_velocity_paths(v0, noise.increments[None, :], grid.dt, params, coupling)[0]
    return VelocityPath(grid, values)


def exact_energy_path(
    ic: InitialCondition, grid: TimeGrid, noise: NoisePath, params: LangevinParams, coupling: str = "energy"
) -> EnergyPath:
    """``K_i = m V_i**2 / 2`` along :func:`exact_velocity_path` for the same noise."""
    v = exact_velocity_path(ic, grid, noise, params, coupling).values
    return EnergyPath(grid, 0.5 * params.m * v**2)


def mean_energy_closed_form(t, params: LangevinParams, ev0_sq: float):
    """``E[K_t] = m/2 e^{-2(gamma/m)t} E[V0^2] + sigma^2/(4 gamma) (1 - e^{-2(gamma/m)t})``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("t must be nonnegative")
    if ev0_sq < 0:
        raise DomainError("E[V0^2] must be nonnegative")
    x = -2 * params.gamma / params.m * t
    value = 0.5 * params.m * np.exp(x) * ev0_sq - params.equilibrium_energy * np.expm1(x)
    return float(value) if value.ndim == 0 else value


def stationary_energy_sample(params: LangevinParams, z):
    """Stationary kinetic energy ``sigma**2 z**2 / (4 gamma)``: Gamma(1/2, sigma**2/(2 gamma))."""
    z = np.asarray(z, dtype=float)
    value = params.sigma**2 * z**2 / (4 * params.gamma)
    return float(value) if value.ndim == 0 else value
