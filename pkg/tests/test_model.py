import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from langevin_energy.model import (
    DomainError,
    EnergyPath,
    LangevinParams,
    NoisePath,
    TimeGrid,
    equilibrium_mean_energy,
    make_noise_path,
    noise_block,
)

positive = st.floats(min_value=1e-3, max_value=1e3, allow_nan=False)


@pytest.mark.parametrize("field", ["m", "gamma", "sigma", "k_B"])
@pytest.mark.parametrize("bad", [0.0, -1.0, math.inf, math.nan])
def test_params_reject_nonpositive(field, bad):
    with pytest.raises(DomainError):
        LangevinParams(**{field: bad})


def test_derived_quantities():
    p = LangevinParams(2.0, 4.0, 2.0)
    assert p.relaxation_time == 0.5
    assert p.equilibrium_energy == 0.25
    assert p.temperature == 0.5
    assert p.stationary_velocity_variance == 0.25


@pytest.mark.parametrize(
    "m, gamma, sigma, expected", [(1, 1, 2, 1.0), (5, 1, 2, 1.0), (1, 2, 2, 0.5)]
)
def test_equilibrium_mean_energy_examples(m, gamma, sigma, expected):
    assert equilibrium_mean_energy(LangevinParams(m, gamma, sigma)) == expected


@given(positive, positive, positive)
def test_equipartition_exact_in_natural_units(m, gamma, sigma):
    p = LangevinParams(m, gamma, sigma)
    assert equilibrium_mean_energy(p) == p.k_B * p.temperature / 2


@given(positive, positive, positive, positive)
def test_equipartition_any_boltzmann_constant(m, gamma, sigma, k_B):
    p = LangevinParams(m, gamma, sigma, k_B)
    assert math.isclose(equilibrium_mean_energy(p), p.k_B * p.temperature / 2, rel_tol=4e-16)


def test_grid_from_horizon_is_robust_to_rounding():
    assert TimeGrid.from_horizon(0.1, 0.3).n_steps == 3
    assert TimeGrid.from_horizon(1e-3, 10.0).n_steps == 10_000
    assert TimeGrid.from_horizon(0.3, 1.0).n_steps == 4
    with pytest.raises(DomainError):
        TimeGrid(0.0, 3)
    with pytest.raises(DomainError):
        TimeGrid(0.1, 0)
    with pytest.raises(DomainError):
        TimeGrid.from_horizon(0.1, -1)


def test_grid_index_of():
    g = TimeGrid(0.01, 300)
    assert g.index_of(1.0) == 100
    assert g.times[-1] == pytest.approx(3.0)
    with pytest.raises(DomainError):
        g.index_of(3.5)


def test_noise_determinism_and_separation():
    g = TimeGrid(0.01, 100)
    a, b = make_noise_path(1, 0, g), make_noise_path(1, 0, g)
    assert np.array_equal(a.increments, b.increments) and a.z0 == b.z0
    assert not np.array_equal(a.increments, make_noise_path(1, 1, g).increments)
    assert not np.array_equal(a.increments, make_noise_path(2, 0, g).increments)


def test_noise_is_read_only():
    path = make_noise_path(1, 0, TimeGrid(0.01, 10))
    with pytest.raises(ValueError):
        path.increments[0] = 1.0


def test_noise_block_rows_match_single_paths():
    g = TimeGrid(0.01, 50)
    dW, z0 = noise_block(9, [3, 0, 7], g)
    for row, pid in enumerate([3, 0, 7]):
        single = make_noise_path(9, pid, g)
        assert np.array_equal(dW[row], single.increments)
        assert z0[row] == single.z0


def test_noise_independent_of_call_order():
    g = TimeGrid(0.01, 20)
    forward, _ = noise_block(5, range(4), g)
    backward, _ = noise_block(5, reversed(range(4)), g)
    assert np.array_equal(forward, backward[::-1])


def test_increment_statistics():
    # 10^5 increments with dt = 0.01: mean within 3 SE of 0, variance within 2% of dt
    dW, _ = noise_block(2024, range(100), TimeGrid(0.01, 1000))
    x = dW.ravel()
    assert abs(x.mean()) <= 3 * x.std(ddof=1) / math.sqrt(x.size)
    assert abs(x.var(ddof=1) - 0.01) <= 0.02 * 0.01


def test_noise_grid_check_and_coarsen():
    g = TimeGrid(0.01, 8)
    path = make_noise_path(0, 0, g)
    path.check_grid(g)
    with pytest.raises(DomainError):
        path.check_grid(TimeGrid(0.01, 9))
    coarse = path.coarsen(4)
    assert coarse.n_steps == 2 and coarse.dt == pytest.approx(0.04)
    assert coarse.increments.sum() == pytest.approx(path.increments.sum())
    with pytest.raises(DomainError):
        path.coarsen(3)
    with pytest.raises(DomainError):
        NoisePath(np.zeros((2, 2)), 0.1)


def test_energy_path_rejects_negative_values():
    g = TimeGrid(0.1, 2)
    EnergyPath(g, [0.0, 1.0, 0.5])
    with pytest.raises(DomainError):
        EnergyPath(g, [0.0, -1e-300, 0.5])
    with pytest.raises(DomainError):
        EnergyPath(g, [0.0, math.nan, 0.5])
    with pytest.raises(DomainError):
        EnergyPath(g, [0.0, 1.0])
