import math

import numpy as np
import pytest

from analysis.data import (
    gaussian,
    make_initial_data,
    plane_wave,
    random_band_limited,
    reference_solution,
    soliton,
)
from analysis.diagnostics import l2_norm
from analysis.errors import ConfigurationError
from analysis.spectral import make_grid


def test_plane_wave_sits_on_one_mode(grid):
    coeffs = np.abs(plane_wave(grid, 0.5, 3).spectral())
    assert np.count_nonzero(coeffs > 1e-9) == 1
    assert grid.xi[np.argmax(coeffs)] == pytest.approx(2 * np.pi * 3 / grid.L)


def test_gaussian_norm(grid):
    # ||a exp(-x^2/2)||^2 = a^2 sqrt(pi)
    assert l2_norm(gaussian(grid, 2.0)) == pytest.approx(2.0 * math.pi**0.25, rel=1e-10)


def test_soliton_norm():
    assert l2_norm(soliton(make_grid(64.0, 512), 1.0)) == pytest.approx(2.0, rel=1e-10)


@pytest.mark.parametrize("seed", [0, 1, 7])
def test_random_data_is_band_limited_with_given_norm(grid, seed):
    f = random_band_limited(grid, 2.0, 0.75, seed)
    assert l2_norm(f) == pytest.approx(0.75, rel=1e-12)
    assert np.max(np.abs(f.spectral()[np.abs(grid.xi) > 2.0])) <= 1e-12


def test_random_data_is_reproducible(grid):
    a = random_band_limited(grid, 2.0, 1.0, 5)
    b = random_band_limited(grid, 2.0, 1.0, 5)
    assert np.array_equal(a.values, b.values)


def test_make_initial_data(grid):
    f = make_initial_data(grid, {"generator": "gaussian", "amplitude": 0.5, "width": 2.0})
    assert np.allclose(f.values, gaussian(grid, 0.5, 0.0, 2.0).values)


@pytest.mark.parametrize("spec", [
    {"generator": "sawtooth"},
    {"generator": "plane_wave", "frequency": 2},
    {"generator": "gaussian", "width": 0.0},
])
def test_bad_initial_data(grid, spec):
    with pytest.raises(ConfigurationError):
        make_initial_data(grid, spec)


def test_reference_only_where_known(grid):
    assert reference_solution(grid, {"generator": "gaussian"}, 1, 1.0) is None
    assert reference_solution(grid, {"generator": "soliton"}, 1, 1.0) is None
    assert reference_solution(grid, {"generator": "soliton"}, -1, 1.0) is not None
    at_zero = reference_solution(grid, {"generator": "plane_wave", "amplitude": 0.5, "mode": 3}, 1, 0.0)
    assert np.allclose(at_zero.values, plane_wave(grid, 0.5, 3).values)
