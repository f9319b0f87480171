import numpy as np
import pytest

from avector.spectral import Grid


@pytest.fixture(scope="session")
def grid16():
    return Grid((16, 16, 16))


@pytest.fixture(scope="session")
def grid32():
    return Grid((32, 32, 32))


@pytest.fixture(scope="session")
def grid2d():
    return Grid((32, 32))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
