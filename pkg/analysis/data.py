"""Initial data generators and the closed-form solutions used as references."""

import logging
import math

import numpy as np
from scipy import fft as sfft

from analysis.errors import ConfigurationError
from analysis.spectral import ComplexField

logger = logging.getLogger(__name__)


# ── Generators ────────────────────────────────────────────────────────────────

def zero(grid):
    return ComplexField(grid, np.zeros(grid.M, dtype=complex))


def constant(grid, amplitude=1.0):
    return ComplexField(grid, np.full(grid.M, amplitude, dtype=complex))


def plane_wave(grid, amplitude=1.0, mode=1):
    """a * exp(i k x) with k = 2*pi*mode/L, so it is periodic on the grid."""
    k = 2 * np.pi * mode / grid.L
    return ComplexField(grid, amplitude * np.exp(1j * k * grid.x))


def soliton(grid, eta=1.0, center=0.0):
    """sqrt(2) eta sech(eta (x - center)); the focusing ground state at t = 0."""
    return ComplexField(grid, math.sqrt(2) * eta / np.cosh(eta * (grid.x - center)))


def gaussian(grid, amplitude=1.0, center=0.0, width=1.0, wavenumber=0.0):
    if width <= 0:
        raise ConfigurationError(f"gaussian width must be positive, got {width}")
    envelope = np.exp(-((grid.x - center) ** 2) / (2 * width**2))
    return ComplexField(grid, amplitude * envelope * np.exp(1j * wavenumber * grid.x))


def random_band_limited(grid, band, norm, seed):
    """Complex Gaussian coefficients on |xi| <= band, rescaled to L^2 norm `norm`."""
    if band < 0 or norm < 0:
        raise ConfigurationError("band and norm must be non-negative")
    rng    = np.random.default_rng(seed)
    inside = np.abs(grid.xi) <= band * (1 + 1e-12)
    coeffs = np.zeros(grid.M, dtype=complex)
    coeffs[inside] = rng.standard_normal(inside.sum()) + 1j * rng.standard_normal(inside.sum())
    values = sfft.ifft(coeffs, norm="ortho")
    current = math.sqrt(grid.dx * float(np.sum(np.abs(values) ** 2)))
    if current == 0.0:
        return ComplexField(grid, values)
    return ComplexField(grid, values * (norm / current))


GENERATORS = {
    "zero":                zero,
    "constant":            constant,
    "plane_wave":          plane_wave,
    "soliton":             soliton,
    "gaussian":            gaussian,
    "random_band_limited": random_band_limited,
}


def make_initial_data(grid, spec):
    """
    Builds a field from a spec dict: {"generator": name, **kwargs}.
    Unknown generators or keyword arguments are configuration errors.
    """
    spec = dict(spec)
    name = spec.pop("generator", None)
    if name not in GENERATORS:
        raise ConfigurationError(f"unknown data generator '{name}'; choose from {sorted(GENERATORS)}")
    try:
        return GENERATORS[name](grid, **spec)
    except TypeError as exc:
        raise ConfigurationError(f"bad arguments for generator '{name}': {exc}") from None


# ── Closed forms ──────────────────────────────────────────────────────────────

def plane_wave_solution(grid, amplitude, mode, sigma, t, coupling=1.0):
    """a exp(i(kx - omega t)), omega = k^2 + sigma*coupling*|a|^2."""
    k     = 2 * np.pi * mode / grid.L
    omega = k**2 + sigma * coupling * abs(amplitude) ** 2
    return ComplexField(grid, amplitude * np.exp(1j * (k * grid.x - omega * t)))


def soliton_solution(grid, eta, center, t):
    """Focusing soliton sqrt(2) eta sech(eta (x - center)) exp(i eta^2 t)."""
    return ComplexField(grid, math.sqrt(2) * eta / np.cosh(eta * (grid.x - center)) * np.exp(1j * eta**2 * t))


def reference_solution(grid, spec, sigma, t, coupling=1.0):
    """Closed form for the generators that have one, else None."""
    name = spec.get("generator")
    if name == "plane_wave":
        return plane_wave_solution(grid, spec.get("amplitude", 1.0), spec.get("mode", 1), sigma, t, coupling)
    if name == "soliton" and sigma == -1 and coupling == 1.0:
        return soliton_solution(grid, spec.get("eta", 1.0), spec.get("center", 0.0), t)
    if name == "zero":
        return zero(grid)
    return None
