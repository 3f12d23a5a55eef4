"""Ensemble statistics, Monte Carlo passage times and distribution tests."""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import signal, special

from .exact import InitialCondition, exact_velocity_paths, transition_coefficients
from .integrators import ito_em_paths, strat_heun_paths
from .model import DomainError, LangevinParams, TimeGrid, noise_block, path_generator
from .spurious import SpuriousSpec, spurious_paths

log = logging.getLogger(__name__)

ENSEMBLE_SCHEMES = ("exact", "ito-em", "strat-heun", "spurious")
DIVERGENCE_STREAM = 2
KS_CRITICAL_1PCT = 1.63
MIN_TEST_SAMPLES = 1000
# discrete-monitoring barrier shift, -zeta(1/2)/sqrt(2 pi)
BARRIER_SHIFT = -float(special.zeta(0.5)) / math.sqrt(2 * math.pi)


@dataclass(frozen=True)
class EnsembleStats:
    mean: np.ndarray
    variance: np.ndarray
    standard_error: np.ndarray
    n_paths: int
    grid: TimeGrid | None = None

    def at(self, t: float) -> tuple[float, float]:
        """Mean and standard error at the grid point nearest to ``t``."""
        i = self.grid.index_of(t)
        return float(self.mean[i]), float(self.standard_error[i])


@dataclass(frozen=True)
class TestReport:
    statistic: float
    threshold: float
    passed: bool
    description: str

    __test__ = False  # not a pytest class


@dataclass(frozen=True)
class MfptEstimate:
    mean: float
    standard_error: float
    censored: int
    n_paths: int
    eps: float
    dt: float

    @property
    def heavily_censored(self) -> bool:
        return self.censored > 0.01 * self.n_paths


class _Accumulator:
    """Chan-style merge of per-block mean and sum of squared deviations.

    Blocks must be added in a fixed order for bitwise reproducible results.
    """

    def __init__(self):
        self.n = 0
        self.mean = None
        self.m2 = None

    def add(self, values: np.ndarray) -> None:
        nb = values.shape[0]
        mb = values.mean(axis=0)
        m2b = ((values - mb) ** 2).sum(axis=0)
        if self.n == 0:
            self.n, self.mean, self.m2 = nb, mb, m2b
            return
        n = self.n + nb
        delta = mb - self.mean
        self.mean = self.mean + delta * (nb / n)
        self.m2 = self.m2 + m2b + delta**2 * (self.n * nb / n)
        self.n = n

    def stats(self, grid: TimeGrid | None = None) -> EnsembleStats:
        if self.n < 2:
            raise DomainError("ensemble statistics need at least two paths")
        variance = self.m2 / (self.n - 1)
        return EnsembleStats(self.mean, variance, np.sqrt(variance / self.n), self.n, grid)


def ensemble_stats(paths) -> EnsembleStats:
    """Per-time mean, unbiased variance and standard error of a list of paths."""
    paths = list(paths)
    if len(paths) < 2:
        raise DomainError("ensemble statistics need at least two paths")
    grid = paths[0].grid
    if any(p.grid != grid for p in paths):
        raise DomainError("all paths must share one grid")
    acc = _Accumulator()
    acc.add(np.stack([p.values for p in paths]))
    return acc.stats(grid)


def simulate_block(
    scheme: str,
    path_ids,
    seed: int,
    grid: TimeGrid,
    params: LangevinParams,
    ic: InitialCondition,
    spec: SpuriousSpec | None = None,
) -> np.ndarray:
    """Energy paths ``(len(path_ids), n_steps + 1)`` for one block of path ids."""
    dW, z0 = noise_block(seed, path_ids, grid)
    v0 = ic.sample(z0)
    if scheme == "exact":
        return 0.5 * params.m * exact_velocity_paths(v0, dW, grid.dt, params) ** 2
    k0 = 0.5 * params.m * v0**2
    if scheme == "ito-em":
        return ito_em_paths(k0, dW, grid.dt, params)
    if scheme == "strat-heun":
        return strat_heun_paths(k0, dW, grid.dt, params)
    if scheme == "spurious":
        if spec is None:
            raise DomainError("the spurious scheme needs a SpuriousSpec")
        return spurious_paths(v0, dW, grid.dt, params, spec)[0]
    raise DomainError(f"scheme must be one of {ENSEMBLE_SCHEMES}, got {scheme!r}")


BLOCK_ELEMENTS = 1 << 22


def auto_block_size(grid: TimeGrid) -> int:
    """Paths per block keeping one ``(paths, steps)`` array near 32 MB."""
    return max(16, min(4096, BLOCK_ELEMENTS // (grid.n_steps + 1)))


def _blocks(n_paths: int, block_size: int):
    return [range(start, min(start + block_size, n_paths)) for start in range(0, n_paths, block_size)]


def ensemble_blocks(scheme, params, ic, grid, n_paths, seed, *, spec=None, block_size=None, threads=1):
    """Yield ``(path_ids, energies)`` block by block in path-id order.

    Blocks may be computed on several threads; the order (and hence every
    downstream reduction) does not depend on ``threads``.
    """
    if n_paths < 1:
        raise DomainError("n_paths must be positive")
    blocks = _blocks(n_paths, block_size or auto_block_size(grid))

    def work(ids):
        return simulate_block(scheme, ids, seed, grid, params, ic, spec)

    if threads <= 1:
        for ids in blocks:
            yield ids, work(ids)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for start in range(0, len(blocks), threads):
            window = blocks[start : start + threads]
            yield from zip(window, pool.map(work, window))


def run_ensemble(scheme, params, ic, grid, n_paths, seed, *, spec=None, block_size=None, threads=1) -> EnsembleStats:
    """Streamed per-time statistics over ``n_paths`` independent paths."""
    acc = _Accumulator()
    for _, values in ensemble_blocks(
        scheme, params, ic, grid, n_paths, seed, spec=spec, block_size=block_size, threads=threads
    ):
        acc.add(values)
    return acc.stats(grid)


def terminal_values(scheme, params, ic, grid, n_paths, seed, *, spec=None, block_size=None) -> np.ndarray:
    """Energies at the last grid point, one per path."""
    return np.concatenate(
        [v[:, -1].copy() for _, v in ensemble_blocks(scheme, params, ic, grid, n_paths, seed, spec=spec, block_size=block_size)]
    )


def terminal_velocities(params, ic, grid, n_paths, seed, block_size=None) -> np.ndarray:
    """Signed exact velocities at the last grid point, one per path."""
    out = []
    for ids in _blocks(n_paths, block_size or auto_block_size(grid)):
        dW, z0 = noise_block(seed, ids, grid)
        out.append(exact_velocity_paths(ic.sample(z0), dW, grid.dt, params)[:, -1].copy())
    return np.concatenate(out)


def default_mfpt_eps(params: LangevinParams, dt: float) -> float:
    """Energy threshold matching the discrete-monitoring overshoot of the velocity.

    A zero crossing seen only at grid times is detected late; moving the
    barrier to ``0.5826 (sigma/m) sqrt(dt)`` cancels that bias to leading order.
    """
    v_eps = BARRIER_SHIFT * params.sigma / params.m * math.sqrt(dt)
    return 0.5 * params.m * v_eps**2


def empirical_mfpt(
    v0: float,
    params: LangevinParams,
    dt: float,
    n_paths: int,
    eps: float | None = None,
    t_max: float | None = None,
    seed: int = 0,
    block_size: int = 4096,
    chunk_steps: int = 2048,
) -> MfptEstimate:
    """Monte Carlo mean of the first grid time at which the energy reaches zero.

    Paths follow the exact velocity transition.  A path has hit zero at the
    first grid time where ``m V**2 / 2 <= eps`` or where the velocity has
    changed sign (the continuous path must have crossed zero in between).
    Paths still running at ``t_max`` are censored and left out of the mean.
    """
    if v0 == 0 or not math.isfinite(v0):
        raise DomainError("v0 must be finite and nonzero")
    if eps is None:
        eps = default_mfpt_eps(params, dt)
    if not eps > 0:
        raise DomainError("eps must be positive")
    if n_paths < 2:
        raise DomainError("n_paths must be at least 2")
    t_max = 50 * params.relaxation_time if t_max is None else t_max
    max_steps = int(math.ceil(t_max / dt))
    decay, scale = transition_coefficients(dt, params)
    sign = math.copysign(1.0, v0)
    v_eps = math.sqrt(2 * eps / params.m)
    sqrt_dt = math.sqrt(dt)

    hit_steps = np.full(n_paths, -1, dtype=np.int64)
    if abs(v0) <= v_eps:
        hit_steps[:] = 0
    else:
        for ids in _blocks(n_paths, block_size):
            gens = [path_generator(seed, pid) for pid in ids]
            active = np.arange(len(ids))
            v = np.full(len(ids), float(v0))
            done = 0
            while active.size and done < max_steps:
                n = min(chunk_steps, max_steps - done)
                z = np.stack([gens[j].standard_normal(n) * sqrt_dt for j in active]) / sqrt_dt
                path = signal.lfilter([scale], [1.0, -decay], z, axis=1, zi=(decay * v[active])[:, None])[0]
                crossed = sign * path <= v_eps
                got = crossed.any(axis=1)
                first = np.argmax(crossed, axis=1)
                hit_steps[ids.start + active[got]] = done + first[got] + 1
                v[active] = path[:, -1]
                active = active[~got]
                done += n

    finished = hit_steps >= 0
    censored = int(n_paths - finished.sum())
    times = hit_steps[finished] * dt
    if times.size < 2:
        raise DomainError("fewer than two paths reached zero before t_max")
    estimate = MfptEstimate(
        float(times.mean()), float(times.std(ddof=1) / math.sqrt(times.size)), censored, n_paths, eps, dt
    )
    if estimate.heavily_censored:
        warnings.warn(f"{censored} of {n_paths} paths censored at t_max={t_max}", RuntimeWarning, stacklevel=2)
    return estimate


def gamma_moment_test(samples, params: LangevinParams) -> TestReport:
    """Compare the first two moments with the stationary Gamma(1/2, sigma^2/(2 gamma)) law.

    Passes when the sample mean is within three standard errors of
    ``sigma^2/(4 gamma)`` and the sample variance within 5% of
    ``sigma^4/(8 gamma^2)``.  The statistic is the larger of the two
    normalised deviations, so the threshold is 1.
    """
    x = np.asarray(samples, dtype=float)
    if x.size < MIN_TEST_SAMPLES:
        raise DomainError(f"gamma_moment_test needs at least {MIN_TEST_SAMPLES} samples, got {x.size}")
    mean_target = params.equilibrium_energy
    var_target = params.sigma**4 / (8 * params.gamma**2)
    mean, var = float(x.mean()), float(x.var(ddof=1))
    se = math.sqrt(var / x.size)

    def ratio(dev, tol):
        return 0.0 if dev == 0 else (math.inf if tol == 0 else dev / tol)

    stat = max(ratio(abs(mean - mean_target), 3 * se), ratio(abs(var - var_target), 0.05 * var_target))
    desc = (
        f"mean {mean:.6g} vs {mean_target:.6g} (3 SE = {3 * se:.3g}); "
        f"variance {var:.6g} vs {var_target:.6g} (5% = {0.05 * var_target:.3g})"
    )
    return TestReport(stat, 1.0, stat <= 1.0, desc)


def ks_statistic(samples, cdf) -> float:
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    f = np.asarray(cdf(x), dtype=float)
    upper = np.arange(1, n + 1) / n - f
    lower = f - np.arange(n) / n
    return float(max(upper.max(), lower.max()))


def ks_test(samples, cdf) -> TestReport:
    """One-sample Kolmogorov-Smirnov test at the asymptotic 1% level (``1.63/sqrt(n)``)."""
    x = np.asarray(samples, dtype=float)
    if x.size < MIN_TEST_SAMPLES:
        raise DomainError(f"ks_test needs at least {MIN_TEST_SAMPLES} samples, got {x.size}")
    d = ks_statistic(x, cdf)
    threshold = KS_CRITICAL_1PCT / math.sqrt(x.size)
    return TestReport(d, threshold, d <= threshold, f"KS distance {d:.5f} vs 1% critical value {threshold:.5f}")


def normal_cdf_of(variance: float):
    """Vectorised CDF of ``N(0, variance)``."""
    std = math.sqrt(variance)
    return lambda x: special.ndtr(np.asarray(x) / std)


@dataclass(frozen=True)
class DivergenceRow:
    dt: float
    second_moment: float  # E[(dX/dt)^2]
    scaled: float  # dt * E[(dX/dt)^2], should stay at sigma^2/gamma^2


def brownian_divergence_demo(params: LangevinParams, dt_list, n_samples: int = 100_000, seed: int = 0):
    """Finite-difference velocity of the overdamped limit ``dX = (sigma/gamma) dW``.

    Its mean square grows like ``sigma^2 / (gamma^2 dt)``: the kinetic energy of
    the overdamped model has no limit as ``dt -> 0``.
    """
    rows = []
    for k, dt in enumerate(dt_list):
        if not dt > 0:
            raise DomainError("time steps must be positive")
        dX = params.sigma / params.gamma * path_generator(seed, k, DIVERGENCE_STREAM).standard_normal(n_samples)
        dX *= math.sqrt(dt)
        second = float(np.mean((dX / dt) ** 2))
        rows.append(DivergenceRow(float(dt), second, second * dt))
    return rows
