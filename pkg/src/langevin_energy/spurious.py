"""Spurious solutions of the Stratonovich kinetic-energy equation.

Started away from zero, the energy follows the physical solution until it
first reaches zero at ``T_1``.  From there the Stratonovich equation admits
any continuation that sits at zero for a while (``lambda_n``) and then
relaunches the exact solution from zero velocity, and it also admits staying
at zero for good.  Paths here are built on a grid:

* a hit is the first grid index whose energy is ``<= eps_hit`` (after the
  previous restart plus a gap of at least one grid step);
* on a hit the path is zero on ``[T_n, T_n + lambda_n]`` and restarts from
  ``V = 0`` at ``R_n = T_n + lambda_n`` with the same driving increments;
* a zero wait leaves the path untouched (the physical continuation);
* once the waits run out, ``truncate`` mode absorbs the path at the next hit
  while ``restart`` mode continues physically with no further surgery.

``truncate`` with no waits is the family member that vanishes after ``T_1``;
with waits it is the finite-``N`` family.  ``V0 = 0`` paths begin with the
``initial_wait`` at zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exact import InitialCondition, transition_coefficients
from .integrators import diffusion, strat_drift
from .model import DomainError, EnergyPath, LangevinParams, NoisePath, TimeGrid

MODES = ("restart", "truncate")

_RUN, _WAIT, _ABSORBED, _FREE = 0, 1, 2, 3


@dataclass(frozen=True)
class SpuriousSpec:
    mode: str = "truncate"
    waits: tuple[float, ...] = ()
    initial_wait: float = 0.0
    eps_hit: float = 1e-4
    gap: float | None = None  # minimum spacing after a restart; None means one grid step

    def __post_init__(self):
        if self.mode not in MODES:
            raise DomainError(f"mode must be one of {MODES}, got {self.mode!r}")
        waits = tuple(float(w) for w in self.waits)
        if any(not (math.isfinite(w) and w >= 0) for w in waits):
            raise DomainError("waits (lambdas) must be finite and nonnegative")
        object.__setattr__(self, "waits", waits)
        if not (math.isfinite(self.initial_wait) and self.initial_wait >= 0):
            raise DomainError("initial_wait must be finite and nonnegative")
        if not self.eps_hit > 0:
            raise DomainError("eps_hit must be positive")
        if self.gap is not None and not self.gap > 0:
            raise DomainError("gap must be positive")

    @classmethod
    def default_eps(cls, params: LangevinParams) -> float:
        return 1e-4 * params.equilibrium_energy

    def steps(self, dt: float) -> tuple[list[int], int, int]:
        """Waits, initial wait and gap converted to whole grid steps."""
        waits = [int(round(w / dt)) for w in self.waits]
        gap = 1 if self.gap is None else max(1, int(round(self.gap / dt)))
        return waits, int(round(self.initial_wait / dt)), gap


@dataclass(frozen=True)
class StoppingTimes:
    """Grid indices of zero hits ``T_n`` and restarts ``R_n = T_n + lambda_n``."""

    hits: tuple[int, ...] = ()
    restarts: tuple[int, ...] = ()
    dt: float = 1.0

    @property
    def hit_times(self) -> np.ndarray:
        return np.asarray(self.hits, dtype=float) * self.dt

    @property
    def restart_times(self) -> np.ndarray:
        return np.asarray(self.restarts, dtype=float) * self.dt


def first_zero_hit(path: EnergyPath, eps: float) -> int | None:
    """Smallest index ``i >= 1`` with ``K_i <= eps``, or ``None``."""
    if not eps > 0:
        raise DomainError("eps must be positive")
    below = np.flatnonzero(path.values[1:] <= eps)
    return int(below[0]) + 1 if below.size else None


def spurious_paths(v0, dW: np.ndarray, dt: float, params: LangevinParams, spec: SpuriousSpec):
    """Vectorised construction for rows of ``dW``.

    Returns energies of shape ``(n, n_steps + 1)`` and one
    :class:`StoppingTimes` per row.
    """
    dW = np.atleast_2d(dW)
    n, n_steps = dW.shape
    decay, scale = transition_coefficients(dt, params)
    wait_steps, initial_steps, gap = spec.steps(dt)
    z = dW / math.sqrt(dt)
    half_m = 0.5 * params.m

    v = np.broadcast_to(np.asarray(v0, dtype=float), (n,)).copy()
    state = np.full(n, _RUN)
    search_from = np.ones(n, dtype=np.int64)
    wait_end = np.zeros(n, dtype=np.int64)
    used = np.zeros(n, dtype=np.int64)
    hits = [[] for _ in range(n)]
    restarts = [[] for _ in range(n)]

    out = np.empty((n, n_steps + 1))
    out[:, 0] = half_m * v**2
    for p in np.flatnonzero(v == 0):
        hits[p].append(0)
        if initial_steps > 0:
            state[p], wait_end[p] = _WAIT, initial_steps
            if initial_steps <= n_steps:
                restarts[p].append(initial_steps)
        else:
            restarts[p].append(0)
            search_from[p] = gap + 1

    for i in range(n_steps):
        j = i + 1
        moving = (state == _RUN) | (state == _FREE)
        zi = np.where(v >= 0, z[:, i], -z[:, i])
        v = np.where(moving, decay * v + scale * zi, 0.0)
        k = half_m * v**2
        k[~moving] = 0.0

        relaunch = (state == _WAIT) & (wait_end == j)
        if relaunch.any():
            state[relaunch] = _RUN
            search_from[relaunch] = j + gap + 1

        for p in np.flatnonzero((state == _RUN) & (search_from <= j) & (k <= spec.eps_hit)):
            hits[p].append(j)
            if used[p] < len(wait_steps):
                w = wait_steps[used[p]]
                used[p] += 1
                if w == 0:
                    restarts[p].append(j)
                    search_from[p] = j + gap + 1
                    continue
                k[p] = v[p] = 0.0
                state[p], wait_end[p] = _WAIT, j + w
                if j + w <= n_steps:
                    restarts[p].append(j + w)
            elif spec.mode == "truncate":
                k[p] = v[p] = 0.0
                state[p] = _ABSORBED
            else:
                state[p] = _FREE
        out[:, j] = k

    times = [StoppingTimes(tuple(h), tuple(r), dt) for h, r in zip(hits, restarts)]
    return out, times


def construct_spurious_path(
    ic: InitialCondition, grid: TimeGrid, noise: NoisePath, params: LangevinParams, spec: SpuriousSpec
) -> tuple[EnergyPath, StoppingTimes]:
    noise.check_grid(grid)
    v0 = ic.sample([noise.z0])
    values, times = spurious_paths(v0, noise.increments[None, :], grid.dt, params, spec)
    return EnergyPath(grid, values[0]), times[0]


def residual_terms(values, dW, dt: float, params: LangevinParams) -> np.ndarray:
    """Per-step midpoint residual of the Stratonovich energy equation.

    ``r_i = dK_i - a(K_mid) dt - b(K_mid) dW_i`` with ``K_mid`` the average of
    the two endpoints.  Works on single paths or on ``(n, n_steps + 1)`` stacks.
    """
    values = np.asarray(values, dtype=float)
    dW = np.asarray(dW, dtype=float)
    if values.shape[-1] != dW.shape[-1] + 1:
        raise DomainError("path and noise are not on the same grid")
    mid = 0.5 * (values[..., 1:] + values[..., :-1])
    return np.diff(values, axis=-1) - strat_drift(mid, params) * dt - diffusion(mid, params) * dW


def spurious_residual(path: EnergyPath, noise: NoisePath, params: LangevinParams, steps=None) -> float:
    """Root-mean-square midpoint residual, optionally over a subset of steps."""
    noise.check_grid(path.grid)
    r = residual_terms(path.values, noise.increments, path.grid.dt, params)
    if steps is not None:
        r = r[steps]
    return float(np.sqrt(np.mean(r**2))) if r.size else 0.0
