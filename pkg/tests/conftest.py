import numpy as np
import pytest

from hardykernel.grid import PolarGrid


@pytest.fixture(scope="session")
def grid6():
    return PolarGrid(6)


@pytest.fixture(scope="session")
def grid8():
    return PolarGrid(8)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
