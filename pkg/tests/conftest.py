import math

import pytest

from langevin_energy.model import LangevinParams


@pytest.fixture
def unit_params():
    """m = gamma = 1, sigma = 2: equilibrium energy 1."""
    return LangevinParams(1.0, 1.0, 2.0)


@pytest.fixture
def mfpt_params():
    """m = gamma = 1, sigma = sqrt(2): the passage-time reference case."""
    return LangevinParams(1.0, 1.0, math.sqrt(2.0))
