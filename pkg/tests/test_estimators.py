import math
import warnings

import numpy as np
import pytest
from scipy import stats as scipy_stats

from langevin_energy.acceptance import DEFAULT_SEED
from langevin_energy.estimators import (
    BARRIER_SHIFT,
    _Accumulator,
    auto_block_size,
    brownian_divergence_demo,
    default_mfpt_eps,
    empirical_mfpt,
    ensemble_stats,
    gamma_moment_test,
    ks_statistic,
    ks_test,
    normal_cdf_of,
    run_ensemble,
    simulate_block,
    terminal_values,
    terminal_velocities,
)
from langevin_energy.exact import InitialCondition, stationary_energy_sample
from langevin_energy.model import DomainError, EnergyPath, LangevinParams, TimeGrid, path_generator
from langevin_energy.mfpt import mfpt_velocity
from langevin_energy.spurious import SpuriousSpec

GRID = TimeGrid(0.1, 4)


def energy(values):
    return EnergyPath(GRID, values)


# ---------------------------------------------------------------- ensemble statistics


def test_identical_paths_have_zero_variance():
    s = ensemble_stats([energy([0, 1, 2, 3, 4]), energy([0, 1, 2, 3, 4])])
    assert np.all(s.variance == 0) and np.array_equal(s.mean, [0, 1, 2, 3, 4])


def test_two_point_average():
    k = np.array([0.0, 0.5, 1.0, 1.5, 2.0])
    s = ensemble_stats([energy(np.zeros(5)), energy(2 * k)])
    assert np.array_equal(s.mean, k)
    np.testing.assert_allclose(s.standard_error, np.sqrt(s.variance / 2))


def test_ensemble_stats_validation():
    with pytest.raises(DomainError):
        ensemble_stats([energy(np.zeros(5))])
    with pytest.raises(DomainError):
        ensemble_stats([energy(np.zeros(5)), EnergyPath(TimeGrid(0.2, 4), np.zeros(5))])


def test_block_merge_matches_one_pass():
    x = path_generator(1, 0).gamma(0.5, 2.0, size=(1000, 7))
    acc = _Accumulator()
    for a, b in ((0, 13), (13, 500), (500, 501), (501, 1000)):
        acc.add(x[a:b])
    s = acc.stats()
    np.testing.assert_allclose(s.mean, x.mean(axis=0), rtol=1e-13)
    np.testing.assert_allclose(s.variance, x.var(axis=0, ddof=1), rtol=1e-12)


def test_mean_is_permutation_invariant():
    rng = path_generator(2, 0)
    rows = rng.exponential(size=(50, 5))
    forward = ensemble_stats([energy(r) for r in rows])
    shuffled = ensemble_stats([energy(r) for r in rows[rng.permutation(50)]])
    np.testing.assert_allclose(forward.mean, shuffled.mean, rtol=1e-14)
    # fixed order gives the same bits every time
    again = ensemble_stats([energy(r) for r in rows])
    assert np.array_equal(forward.mean, again.mean) and np.array_equal(forward.variance, again.variance)


@pytest.mark.parametrize("scheme", ["exact", "ito-em", "strat-heun", "spurious"])
def test_thread_count_does_not_change_results(unit_params, scheme):
    grid = TimeGrid(0.01, 50)
    ic = InitialCondition.gaussian(0.5, 1.0)
    spec = SpuriousSpec("restart", waits=(0.05,), eps_hit=0.01)
    one = run_ensemble(scheme, unit_params, ic, grid, 700, 5, spec=spec, block_size=64, threads=1)
    four = run_ensemble(scheme, unit_params, ic, grid, 700, 5, spec=spec, block_size=64, threads=4)
    assert np.array_equal(one.mean, four.mean) and np.array_equal(one.variance, four.variance)


def test_block_size_does_not_change_paths(unit_params):
    grid = TimeGrid(0.01, 30)
    ic = InitialCondition.deterministic(1.0)
    a = terminal_values("ito-em", unit_params, ic, grid, 300, 9, block_size=7)
    b = terminal_values("ito-em", unit_params, ic, grid, 300, 9, block_size=300)
    assert np.array_equal(a, b)


def test_simulate_block_errors(unit_params):
    ic = InitialCondition.deterministic(1.0)
    with pytest.raises(DomainError):
        simulate_block("milstein", range(2), 0, GRID, unit_params, ic)
    with pytest.raises(DomainError):
        simulate_block("spurious", range(2), 0, GRID, unit_params, ic)
    with pytest.raises(DomainError):
        run_ensemble("exact", unit_params, ic, GRID, 0, 0)


def test_auto_block_size_bounds_memory():
    assert auto_block_size(TimeGrid(1e-3, 10_000)) * 10_001 <= 1 << 22
    assert auto_block_size(TimeGrid(0.1, 10)) == 4096
    assert auto_block_size(TimeGrid(1e-6, 10_000_000)) == 16


def test_exact_ensemble_mean_at_one(unit_params):
    stats = run_ensemble("exact", unit_params, InitialCondition.deterministic(0.0), TimeGrid(0.01, 100), 100_000, 17)
    mean, se = stats.at(1.0)
    assert abs(mean - 0.8646647167633873) <= 3 * se


# ---------------------------------------------------------------- passage times


def test_barrier_shift_constant():
    assert BARRIER_SHIFT == pytest.approx(0.5825971579390107, rel=1e-12)
    p = LangevinParams(1.0, 1.0, math.sqrt(2.0))
    v_eps = math.sqrt(2 * default_mfpt_eps(p, 1e-4))
    assert v_eps == pytest.approx(BARRIER_SHIFT * math.sqrt(2.0) * 1e-2)


def test_tiny_start_hits_within_one_step(mfpt_params):
    est = empirical_mfpt(1e-6, mfpt_params, 1e-3, 100, eps=0.5 * 1e-8)
    assert est.mean <= 1e-3 and est.censored == 0


def test_estimate_nonincreasing_in_eps(mfpt_params):
    means = [empirical_mfpt(1.0, mfpt_params, 1e-3, 2000, eps=e, seed=3).mean for e in (1e-10, 1e-5, 1e-3, 1e-2)]
    assert all(a >= b for a, b in zip(means, means[1:])), means


def test_refinement_sweep_approaches_formula(mfpt_params):
    # with a vanishing threshold, late detection on the grid biases the time upward
    means = [empirical_mfpt(1.0, mfpt_params, dt, 20_000, eps=1e-12, seed=1).mean for dt in (1e-2, 1e-3, 1e-4)]
    formula = mfpt_velocity(1.0, mfpt_params)
    assert means[0] > means[1] > means[2] > formula


def test_default_threshold_removes_detection_bias(mfpt_params):
    est = empirical_mfpt(1.0, mfpt_params, 1e-3, 20_000, seed=2)
    formula = mfpt_velocity(1.0, mfpt_params)
    assert abs(est.mean - formula) <= 4 * est.standard_error
    assert abs(est.mean - formula) <= 0.05 * formula


def test_chunked_generation_is_chunk_invariant(mfpt_params):
    a = empirical_mfpt(1.0, mfpt_params, 1e-2, 300, seed=4, chunk_steps=7, block_size=11)
    b = empirical_mfpt(1.0, mfpt_params, 1e-2, 300, seed=4)
    assert a == b


def test_censoring_warns(mfpt_params):
    with pytest.warns(RuntimeWarning, match="censored"):
        est = empirical_mfpt(3.0, mfpt_params, 1e-2, 200, t_max=0.5, seed=0)
    assert est.censored > 2 and est.heavily_censored
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        empirical_mfpt(1.0, mfpt_params, 1e-2, 200, seed=0)


def test_empirical_mfpt_validation(mfpt_params):
    with pytest.raises(DomainError):
        empirical_mfpt(0.0, mfpt_params, 1e-2, 10)
    with pytest.raises(DomainError):
        empirical_mfpt(1.0, mfpt_params, 1e-2, 10, eps=-1.0)
    with pytest.raises(DomainError):
        empirical_mfpt(1.0, mfpt_params, 1e-2, 1)


def test_negative_start_is_symmetric(mfpt_params):
    a = empirical_mfpt(1.0, mfpt_params, 1e-2, 10_000, seed=8)
    b = empirical_mfpt(-1.0, mfpt_params, 1e-2, 10_000, seed=9)
    assert abs(a.mean - b.mean) <= 4 * math.hypot(a.standard_error, b.standard_error)


# ---------------------------------------------------------------- distribution tests


def test_gamma_test_accepts_stationary_draws(unit_params):
    k = stationary_energy_sample(unit_params, path_generator(DEFAULT_SEED, 0).standard_normal(100_000))
    report = gamma_moment_test(k, unit_params)
    assert report.passed and report.threshold == 1.0


def test_gamma_test_rejects_constant_samples(unit_params):
    report = gamma_moment_test(np.full(5000, unit_params.equilibrium_energy), unit_params)
    assert not report.passed


def test_gamma_test_accepts_long_time_ito_energies(unit_params):
    grid = TimeGrid.from_horizon(1e-2, 10.0)
    k = terminal_values("ito-em", unit_params, InitialCondition.deterministic(0.0), grid, 100_000, DEFAULT_SEED)
    assert gamma_moment_test(k, unit_params).passed


def test_tests_are_deterministic_and_need_samples(unit_params):
    x = path_generator(0, 0).gamma(0.5, 2.0, 2000)
    assert gamma_moment_test(x, unit_params) == gamma_moment_test(x, unit_params)
    cdf = normal_cdf_of(1.0)
    assert ks_test(x, cdf) == ks_test(x, cdf)
    with pytest.raises(DomainError):
        gamma_moment_test(x[:10], unit_params)
    with pytest.raises(DomainError):
        ks_test(x[:10], cdf)


def test_ks_accepts_own_distribution_at_default_seed():
    x = path_generator(DEFAULT_SEED, 0).standard_normal(10_000)
    assert ks_test(x, normal_cdf_of(1.0)).passed


def test_ks_calibration_across_seeds():
    passes = sum(ks_test(path_generator(s, 0).standard_normal(10_000), normal_cdf_of(1.0)).passed for s in range(200))
    assert passes >= 194  # 1% level: about 198 expected


def test_ks_rejects_identical_samples():
    report = ks_test(np.zeros(2000), normal_cdf_of(1.0))
    assert report.statistic >= 0.5 and not report.passed


def test_ks_statistic_matches_scipy():
    x = path_generator(5, 0).standard_normal(3000) * 1.1
    ours = ks_statistic(x, normal_cdf_of(1.0))
    theirs = scipy_stats.kstest(x, scipy_stats.norm(scale=1.0).cdf).statistic
    assert ours == pytest.approx(theirs, abs=1e-15)


def test_terminal_velocities_are_maxwell_boltzmann(unit_params):
    grid = TimeGrid.from_horizon(1e-2, 10.0)
    v = terminal_velocities(unit_params, InitialCondition.deterministic(0.0), grid, 10_000, DEFAULT_SEED)
    assert ks_test(v, normal_cdf_of(unit_params.stationary_velocity_variance)).passed


# ---------------------------------------------------------------- Brownian limit


@pytest.mark.parametrize("sigma, target", [(1.0, 1.0), (2.0, 4.0)])
def test_divergence_products(sigma, target):
    rows = brownian_divergence_demo(LangevinParams(1.0, 1.0, sigma), [1e-1, 1e-2, 1e-3])
    for row in rows:
        assert abs(row.scaled - target) <= 0.05 * target
    for coarse, fine in zip(rows, rows[1:]):
        assert fine.second_moment / coarse.second_moment == pytest.approx(10.0, rel=0.05)


def test_divergence_rejects_bad_step(unit_params):
    with pytest.raises(DomainError):
        brownian_divergence_demo(unit_params, [0.1, 0.0])
