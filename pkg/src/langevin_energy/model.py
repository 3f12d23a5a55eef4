"""Physical parameters, time grids, noise streams and path containers.

Every random quantity in the package is drawn from a per-path Philox
substream keyed by ``(seed, path_id, stream)``.  A path therefore depends
only on those three integers and the grid, never on how many other paths
were generated before it or on which thread generated it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

#: Substream tags.  ``INCREMENTS`` drives the Wiener increments of a path,
#: ``INITIAL`` supplies the standard normal used for random initial data.
INCREMENTS = 0
INITIAL = 1


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class RangeError(ValueError):
    """Argument inside the domain but outside the supported numerical range."""


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class LangevinParams:
    """Constants of ``m dV = -gamma V dt + sigma dW``.

    ``temperature`` is derived through fluctuation-dissipation,
    ``sigma**2 = 2 k_B T gamma``, so equipartition holds by construction.
    """

    m: float = 1.0
    gamma: float = 1.0
    sigma: float = 1.0
    k_B: float = 1.0

    def __post_init__(self):
        for name in ("m", "gamma", "sigma", "k_B"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be a positive finite number, got {value!r}")

    @property
    def relaxation_time(self) -> float:
        return self.m / self.gamma

    @property
    def equilibrium_energy(self) -> float:
        return self.sigma**2 / (4 * self.gamma)

    @property
    def temperature(self) -> float:
        return self.sigma**2 / (2 * self.gamma * self.k_B)

    @property
    def stationary_velocity_variance(self) -> float:
        return self.sigma**2 / (2 * self.m * self.gamma)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t_i = i * dt`` for ``i = 0..n_steps``."""

    dt: float
    n_steps: int

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise DomainError(f"dt must be positive, got {self.dt!r}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise DomainError(f"n_steps must be an integer >= 1, got {self.n_steps!r}")
        object.__setattr__(self, "n_steps", int(self.n_steps))

    @classmethod
    def from_horizon(cls, dt: float, horizon: float) -> TimeGrid:
        """Grid with step ``dt`` reaching at least ``horizon``."""
        if not horizon > 0:
            raise DomainError(f"horizon must be positive, got {horizon!r}")
        # tolerate horizon/dt landing a hair above an integer
        n = math.ceil(horizon / dt - 1e-9)
        return cls(dt, max(n, 1))

    @property
    def horizon(self) -> float:
        return self.dt * self.n_steps

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    def index_of(self, t: float) -> int:
        """Nearest grid index to time ``t``."""
        i = int(round(t / self.dt))
        if not 0 <= i <= self.n_steps:
            raise DomainError(f"time {t} lies outside the grid [0, {self.horizon}]")
        return i


@dataclass(frozen=True)
class NoisePath:
    """Wiener increments driving one sample path.

    ``z0`` is an extra standard normal draw reserved for random initial data;
    it comes from its own substream so it never shifts the increments.
    """

    increments: np.ndarray
    dt: float
    z0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "increments", _frozen(self.increments))
        if self.increments.ndim != 1:
            raise DomainError("increments must be one-dimensional")

    @property
    def n_steps(self) -> int:
        return self.increments.size

    def check_grid(self, grid: TimeGrid) -> None:
        if self.n_steps != grid.n_steps or not math.isclose(self.dt, grid.dt, rel_tol=1e-12):
            raise DomainError(
                f"noise ({self.n_steps} steps, dt={self.dt}) does not match grid "
                f"({grid.n_steps} steps, dt={grid.dt})"
            )

    def coarsen(self, factor: int) -> NoisePath:
        """Sum consecutive blocks of ``factor`` increments (Brownian refinement in reverse)."""
        if self.n_steps % factor:
            raise DomainError(f"{self.n_steps} steps are not divisible by {factor}")
        summed = self.increments.reshape(-1, factor).sum(axis=1)
        return NoisePath(summed, self.dt * factor, self.z0)


@dataclass(frozen=True)
class VelocityPath:
    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))
        if self.values.shape != (self.grid.n_steps + 1,):
            raise DomainError("velocity path length does not match grid")


@dataclass(frozen=True)
class EnergyPath:
    """Kinetic energy sampled on a grid.  Negative values are rejected."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))
        if self.values.shape != (self.grid.n_steps + 1,):
            raise DomainError("energy path length does not match grid")
        if np.any(self.values < 0) or not np.all(np.isfinite(self.values)):
            raise DomainError("kinetic energy must be finite and nonnegative")


def path_generator(seed: int, path_id: int, stream: int = INCREMENTS) -> np.random.Generator:
    """Counter-based generator for one ``(seed, path_id, stream)`` substream."""
    seq = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=(int(path_id), int(stream)))
    return np.random.Generator(np.random.Philox(seq))


def make_noise_path(seed: int, path_id: int, grid: TimeGrid) -> NoisePath:
    """Wiener increments ``N(0, dt)`` for path ``path_id``.

    Identical arguments give bit-identical output; different ``path_id``
    values give independent streams.
    """
    increments = path_generator(seed, path_id).standard_normal(grid.n_steps) * math.sqrt(grid.dt)
    z0 = float(path_generator(seed, path_id, INITIAL).standard_normal())
    return NoisePath(increments, grid.dt, z0)


def noise_block(seed: int, path_ids, grid: TimeGrid) -> tuple[np.ndarray, np.ndarray]:
    """Stack the noise of several paths: increments ``(n, n_steps)`` and ``z0`` ``(n,)``.

    Row ``j`` is bit-identical to ``make_noise_path(seed, path_ids[j], grid)``.
    """
    path_ids = list(path_ids)
    dW = np.empty((len(path_ids), grid.n_steps))
    z0 = np.empty(len(path_ids))
    scale = math.sqrt(grid.dt)
    for j, pid in enumerate(path_ids):
        dW[j] = path_generator(seed, pid).standard_normal(grid.n_steps) * scale
        z0[j] = path_generator(seed, pid, INITIAL).standard_normal()
    return dW, z0


def equilibrium_mean_energy(params: LangevinParams) -> float:
    """Long-time mean kinetic energy ``sigma**2 / (4 gamma)``."""
    return params.sigma**2 / (4 * params.gamma)
