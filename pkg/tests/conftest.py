import numpy as np
import pytest

from specdegen.spectral import make_grid


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def grid():
    return make_grid(2**12)


@pytest.fixture(scope="session")
def grid14():
    return make_grid(2**14)

