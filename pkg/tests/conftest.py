import numpy as np
import pytest

from analysis.data import gaussian
from analysis.spectral import make_grid


@pytest.fixture
def grid():
    return make_grid(32.0, 256)


@pytest.fixture
def unit_grid():
    """L = 2*pi, so the lattice is the integers."""
    return make_grid(2 * np.pi, 8)


@pytest.fixture
def bump(grid):
    return gaussian(grid, 1.0, 0.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
