import numpy as np
import pytest

from capns.grid import make_grid


@pytest.fixture(scope="session")
def grid1d():
    return make_grid(1, 128, 2.0 * np.pi)


@pytest.fixture(scope="session")
def grid1d_unit():
    return make_grid(1, 64, 1.0)


@pytest.fixture(scope="session")
def grid2d():
    return make_grid(2, 32, 2.0 * np.pi)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
