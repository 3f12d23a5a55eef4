"""Acceptance suite: the end-to-end checks run by ``langevin-energy validate``.

Each criterion returns a :class:`CriterionResult`; :func:`run_suite` runs them
all at either the ``quick`` (10^4 paths) or ``full`` (10^5 paths) level.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import specfun
from .estimators import (
    auto_block_size,
    brownian_divergence_demo,
    empirical_mfpt,
    gamma_moment_test,
    ks_test,
    normal_cdf_of,
    run_ensemble,
    terminal_values,
    terminal_velocities,
)
from .exact import InitialCondition, exact_velocity_paths, mean_energy_closed_form
from .integrators import drift_conversion, ito_drift, ito_em_paths, strat_drift, strat_heun_paths
from .mfpt import mfpt_finite_boundary, mfpt_ode_residual, mfpt_velocity
from .model import LangevinParams, TimeGrid, noise_block
from .spurious import SpuriousSpec, residual_terms, spurious_paths

DEFAULT_SEED = 42
LEVELS = {"quick": 10_000, "full": 100_000}

# reference values, pinned with arbitrary-precision quadrature of the closed form
MFPT_V1_REFERENCE = 0.902
MFPT_REFERENCE_TOL = 1e-3
FULL_SCALE = LEVELS["full"]


def _level_tolerance(fixed: float, se: float, n_paths: int) -> float:
    """Fixed tolerance at full scale; widened to 3 SE for smaller smoke runs."""
    return fixed if n_paths >= FULL_SCALE else max(fixed, 3 * se)


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    measured: str
    expected: str
    seconds: float = 0.0

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.number:2d} {self.name}: {self.measured} | expected {self.expected} ({self.seconds:.1f}s)"


def _timed(fn):
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        result = fn(*args, **kwargs)
        return CriterionResult(**{**result.__dict__, "seconds": time.perf_counter() - start})

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@_timed
def mean_energy_law(n_paths: int = 100_000, seed: int = DEFAULT_SEED) -> CriterionResult:
    params = LangevinParams(1.0, 1.0, 2.0)
    grid = TimeGrid.from_horizon(0.01, 3.0)
    stats = run_ensemble("exact", params, InitialCondition.deterministic(0.0), grid, n_paths, seed)
    parts, ok = [], True
    for t in (0.1, 0.5, 1.0, 3.0):
        mean, se = stats.at(t)
        exact = mean_energy_closed_form(t, params, 0.0)
        ok &= abs(mean - exact) <= 3 * se
        parts.append(f"t={t}: {mean:.5f}~{exact:.5f} ({abs(mean - exact) / se:.2f} SE)")
    mean3, se3 = stats.at(3.0)
    ok &= abs(mean3 - 1.0) <= _level_tolerance(0.015, se3, n_paths)
    return CriterionResult(
        1, "mean-energy law", bool(ok), "; ".join(parts), "within 3 SE of closed form; t=3 within 1.5% of 1.0"
    )


@_timed
def ito_leaves_zero(n_paths: int = 100_000, seed: int = DEFAULT_SEED) -> CriterionResult:
    params = LangevinParams(1.0, 1.0, 2.0)
    grid = TimeGrid.from_horizon(1e-3, 1.0)
    stats = run_ensemble("ito-em", params, InitialCondition.deterministic(0.0), grid, n_paths, seed)
    mean, se = stats.at(1.0)
    exact = mean_energy_closed_form(1.0, params, 0.0)
    tol = max(3 * se, 0.02 * exact)
    return CriterionResult(
        2,
        "Ito equation leaves K=0",
        abs(mean - exact) <= tol,
        f"mean K(1) = {mean:.5f} (SE {se:.5f})",
        f"{exact:.5f} +/- {tol:.5f}",
    )


@_timed
def stratonovich_absorption(n_paths: int = 1000, seed: int = DEFAULT_SEED) -> CriterionResult:
    params = LangevinParams(1.0, 1.0, 2.0)
    grid = TimeGrid.from_horizon(1e-3, 1.0)
    dW, _ = noise_block(seed, range(n_paths), grid)
    paths = strat_heun_paths(np.zeros(n_paths), dW, grid.dt, params)
    nonzero = int(np.count_nonzero(paths))
    return CriterionResult(
        3, "Stratonovich absorption at K=0", nonzero == 0, f"{nonzero} nonzero values over {n_paths} paths", "0"
    )


@_timed
def interpretations_differ(n_paths: int = 1000, seed: int = DEFAULT_SEED) -> CriterionResult:
    """Same increments, same start K=0: Ito leaves zero, Stratonovich stays, drift conversion exact for K>0."""
    params = LangevinParams(1.0, 1.0, 2.0)
    grid = TimeGrid.from_horizon(1e-3, 1.0)
    dW, _ = noise_block(seed, range(n_paths), grid)
    strat = strat_heun_paths(np.zeros(n_paths), dW, grid.dt, params)
    ito = ito_em_paths(np.zeros(n_paths), dW, grid.dt, params)
    ito_mean = float(ito[:, -1].mean())
    ito_se = float(ito[:, -1].std(ddof=1) / math.sqrt(n_paths))
    exact = mean_energy_closed_form(1.0, params, 0.0)
    ks = np.logspace(-12, 3, 200)
    identity = all(strat_drift(k, params) + drift_conversion(params, k) == ito_drift(k, params) for k in ks)
    ok = (
        not np.any(strat)
        and bool(np.all(ito[:, 1] > 0))
        and abs(ito_mean - exact) <= max(3 * ito_se, 0.02 * exact)
        and identity
    )
    return CriterionResult(
        4,
        "Ito vs Stratonovich differ at K=0",
        bool(ok),
        f"strat max {strat.max():.3g}; ito mean K(1) {ito_mean:.4f} (SE {ito_se:.4f}); drift identity {identity}",
        f"strat 0; ito {exact:.4f}; identity exact",
    )


@_timed
def mfpt_formula(n_paths: int = 100_000, seed: int = DEFAULT_SEED) -> CriterionResult:
    params = LangevinParams(1.0, 1.0, math.sqrt(2.0))
    formula = mfpt_velocity(1.0, params)
    est = empirical_mfpt(1.0, params, 1e-4, n_paths, seed=seed)
    rel = abs(est.mean - formula) / formula
    residual = max(abs(mfpt_ode_residual(v, params, 1e-3)) for v in np.linspace(0.1, 3.0, 59))
    ok = rel <= 0.05 and residual <= 1e-4 and abs(formula - MFPT_V1_REFERENCE) <= MFPT_REFERENCE_TOL
    return CriterionResult(
        5,
        "mean first passage time",
        bool(ok),
        f"formula {formula:.6f}, MC {est.mean:.5f} +/- {est.standard_error:.5f} ({100 * rel:.2f}%), "
        f"max ODE residual {residual:.2e}, censored {est.censored}",
        "MC within 5%, residual <= 1e-4, formula 0.902 +/- 1e-3",
    )


@_timed
def finite_boundary_convergence() -> CriterionResult:
    params = LangevinParams(1.0, 1.0, math.sqrt(2.0))
    values = [mfpt_finite_boundary(1.0, M, params) for M in (2.0, 4.0, 8.0)]
    limit = mfpt_velocity(1.0, params)
    gap = abs(values[-1] - limit)
    ok = gap <= 1e-3 and values[0] <= values[1] <= values[2]
    return CriterionResult(
        6,
        "finite-boundary convergence",
        bool(ok),
        "T_M(1) = " + ", ".join(f"{v:.6f}" for v in values) + f"; |T_8 - T| = {gap:.2e}",
        "nondecreasing in M, |T_8 - T| <= 1e-3",
    )


@_timed
def dawson_identity() -> CriterionResult:
    xs = np.linspace(0.0, 2.0, 41)
    identity = max(abs(specfun.integral_dawson_minus(x) - 0.5 * x * x * specfun.hyp2f2(x * x)) for x in xs)
    # independent quadrature of the defining integrals
    dp_oracle = math.exp(-1.0) * integrate.quad(lambda u: math.exp(u * u), 0, 1, epsabs=1e-14, epsrel=1e-13)[0]
    dm_oracle = math.exp(1.0) * integrate.quad(lambda u: math.exp(-u * u), 0, 1, epsabs=1e-14, epsrel=1e-13)[0]
    err_p = abs(specfun.dawson_plus(1.0) - dp_oracle)
    err_m = abs(specfun.dawson_minus(1.0) - dm_oracle)
    ok = identity <= 1e-8 and err_p <= 1e-8 and err_m <= 1e-8
    return CriterionResult(
        7,
        "Dawson / 2F2 identity",
        bool(ok),
        f"identity max err {identity:.2e}; |D+(1) err| {err_p:.2e}; |D-(1) err| {err_m:.2e}",
        "all <= 1e-8",
    )


@_timed
def stationary_distribution(n_paths: int = 10_000, seed: int = DEFAULT_SEED) -> CriterionResult:
    params = LangevinParams(1.0, 1.0, 2.0)
    grid = TimeGrid.from_horizon(1e-3, 10.0)
    ic = InitialCondition.deterministic(0.0)
    energies = terminal_values("ito-em", params, ic, grid, n_paths, seed)
    gamma = gamma_moment_test(energies, params)
    velocities = terminal_velocities(params, ic, grid, n_paths, seed)
    ks = ks_test(velocities, normal_cdf_of(params.stationary_velocity_variance))
    return CriterionResult(
        8,
        "stationary distribution",
        gamma.passed and ks.passed,
        f"{gamma.description}; {ks.description}",
        "gamma moments and KS pass at 1%",
    )


@_timed
def spurious_mean_decay(n_paths: int = 100_000, seed: int = DEFAULT_SEED) -> CriterionResult:
    params = LangevinParams(1.0, 1.0, 2.0)
    grid = TimeGrid.from_horizon(1e-3, 10.0 * params.relaxation_time)
    block_size = auto_block_size(grid)
    spec = SpuriousSpec("truncate", eps_hit=SpuriousSpec.default_eps(params))
    spurious_sum = physical_sum = physical_sq = 0.0
    for start in range(0, n_paths, block_size):
        ids = range(start, min(start + block_size, n_paths))
        dW, _ = noise_block(seed, ids, grid)
        v0 = np.ones(len(ids))
        spurious_sum += spurious_paths(v0, dW, grid.dt, params, spec)[0][:, -1].sum()
        k_phys = 0.5 * params.m * exact_velocity_paths(v0, dW, grid.dt, params)[:, -1] ** 2
        physical_sum += k_phys.sum()
        physical_sq += (k_phys**2).sum()
    target = params.equilibrium_energy
    spurious_mean = spurious_sum / n_paths
    physical_mean = physical_sum / n_paths
    physical_se = math.sqrt(max(physical_sq / n_paths - physical_mean**2, 0.0) / n_paths)
    tol = _level_tolerance(0.02 * target, physical_se, n_paths)
    ok = spurious_mean <= 0.01 * target and abs(physical_mean - target) <= tol
    return CriterionResult(
        9,
        "spurious mean decay",
        bool(ok),
        f"spurious E[K(10)] = {spurious_mean:.3g}, physical E[K(10)] = {physical_mean:.5f}",
        f"spurious <= {0.01 * target:.3g}, physical {target:.3g} +/- {tol:.3g}",
    )


@_timed
def spurious_residual_calibration(n_paths: int = 1000, seed: int = DEFAULT_SEED) -> CriterionResult:
    params = LangevinParams(1.0, 1.0, math.sqrt(2.0))
    grid = TimeGrid.from_horizon(1e-3, 5.0)
    dW, _ = noise_block(seed, range(n_paths), grid)
    v0 = np.ones(n_paths)
    physical = 0.5 * params.m * exact_velocity_paths(v0, dW, grid.dt, params) ** 2
    baseline = float(np.sqrt(np.mean(residual_terms(physical, dW, grid.dt, params) ** 2)))
    eps = SpuriousSpec.default_eps(params)
    specs = [
        SpuriousSpec("truncate", eps_hit=eps),
        SpuriousSpec("truncate", waits=(0.25, 0.5, 0.25), eps_hit=eps),
        SpuriousSpec("restart", waits=(0.5, 0.1, 1.0), eps_hit=eps),
    ]
    parts, ok = [], True
    for spec in specs:
        values, _ = spurious_paths(v0, dW, grid.dt, params, spec)
        r = residual_terms(values, dW, grid.dt, params)
        zero = (values[:, 1:] == 0) & (values[:, :-1] == 0)
        positive_rms = float(np.sqrt(np.mean(r[~zero] ** 2)))
        zero_max = float(np.abs(r[zero]).max()) if zero.any() else 0.0
        ok &= positive_rms <= 2 * baseline and zero_max == 0.0
        parts.append(f"{spec.mode}{list(spec.waits)}: {positive_rms / baseline:.2f}x, zero-max {zero_max:g}")
    return CriterionResult(
        10,
        "spurious residual calibration",
        bool(ok),
        f"physical rms {baseline:.3e}; " + "; ".join(parts),
        "positive segments <= 2x physical, zero segments exactly 0",
    )


@_timed
def brownian_divergence(n_samples: int = 100_000, seed: int = DEFAULT_SEED) -> CriterionResult:
    parts, ok = [], True
    for sigma in (1.0, 2.0):
        params = LangevinParams(1.0, 1.0, sigma)
        target = sigma**2 / params.gamma**2
        for row in brownian_divergence_demo(params, (1e-1, 1e-2, 1e-3), n_samples, seed):
            ok &= abs(row.scaled - target) <= 0.05 * target
            parts.append(f"s={sigma:g},dt={row.dt:g}: {row.scaled:.4f}")
    return CriterionResult(
        11, "Brownian-limit divergence", bool(ok), "; ".join(parts), "dt*E[(dX/dt)^2] within 5% of sigma^2/gamma^2"
    )


def strong_errors(n_paths: int = 500, seed: int = DEFAULT_SEED, h: float = 2.5e-4, horizon: float = 1.0):
    """RMS distance between Euler-Maruyama at steps 4h, 2h, h and the coupled exact path on h/4."""
    params = LangevinParams(1.0, 1.0, math.sqrt(2.0))
    fine = TimeGrid.from_horizon(h / 4, horizon)
    dW, _ = noise_block(seed, range(n_paths), fine)
    v0 = np.full(n_paths, 1.0)  # K0 = 0.5
    reference = 0.5 * params.m * exact_velocity_paths(v0, dW, fine.dt, params) ** 2
    errors = []
    for factor in (16, 8, 4):
        coarse = dW.reshape(n_paths, -1, factor).sum(axis=2)
        em = ito_em_paths(reference[:, 0], coarse, fine.dt * factor, params)
        errors.append(float(np.sqrt(np.mean((em - reference[:, ::factor]) ** 2))))
    return errors


@_timed
def strong_error_monotonicity(n_paths: int = 500, seed: int = DEFAULT_SEED) -> CriterionResult:
    errors = strong_errors(n_paths, seed)
    ok = errors[0] > errors[1] > errors[2]
    return CriterionResult(
        12,
        "strong-error monotonicity",
        ok,
        "RMS error at dt=1e-3, 5e-4, 2.5e-4: " + ", ".join(f"{e:.4e}" for e in errors),
        "strictly decreasing",
    )


def run_suite(level: str = "full", seed: int = DEFAULT_SEED, report=print) -> list[CriterionResult]:
    """Run every criterion; ``report`` receives one line per criterion as it finishes."""
    n = LEVELS[level]
    jobs = [
        lambda: mean_energy_law(n, seed),
        lambda: ito_leaves_zero(n, seed),
        lambda: stratonovich_absorption(1000, seed),
        lambda: interpretations_differ(1000, seed),
        lambda: mfpt_formula(n, seed),
        finite_boundary_convergence,
        dawson_identity,
        lambda: stationary_distribution(10_000, seed),
        lambda: spurious_mean_decay(n, seed),
        lambda: spurious_residual_calibration(1000, seed),
        lambda: brownian_divergence(100_000, seed),
        lambda: strong_error_monotonicity(500, seed),
    ]
    results = []
    for job in jobs:
        result = job()
        results.append(result)
        if report is not None:
            report(result.line())
    return results
