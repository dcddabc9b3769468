import numpy as np
import pytest

from sbp_minimizer.constants import estimate_constants
from sbp_minimizer.field import ModelParams, default_grid, make_grid
from sbp_minimizer.minimize import MinimizeConfig, multi_start


@pytest.fixture(scope="session")
def grid():
    return default_grid()


@pytest.fixture(scope="session")
def small_grid():
    return make_grid(512, 30.0)


@pytest.fixture(scope="session")
def consts():
    return estimate_constants(1.0, 2.5)


@pytest.fixture(scope="session")
def half_params(consts):
    return ModelParams(1.0, 2.5, 0.5 * consts.c0)


@pytest.fixture(scope="session")
def minimizer(consts, half_params, grid):
    """Best of 8 starts at c0/2; shared by several modules."""
    return multi_start(half_params, consts, MinimizeConfig(), 8, grid)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
