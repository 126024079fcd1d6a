"""
Spectral substrate shared by every other module.

What it provides:
  - Grid: periodic grid of length L with M points, centered coordinates
    x_m = -L/2 + m*dx and the dual lattice xi_k = 2*pi*k/L (FFT order)
  - ComplexField: immutable samples on a Grid, physical or spectral
  - MultiplierSymbol and the low-pass / band / free-phase factories
  - transform, apply_symbol, lp_project, free_evolve, pairing, symplectic_form
  - extend_periodic / fold_to_torus between a torus and its line surrogate

Transforms are unitary (scipy.fft, norm="ortho"), so Parseval holds with
the dx weight on both sides.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
from scipy import fft as sfft

from analysis.errors import ConfigurationError, NumericError

logger = logging.getLogger(__name__)

PHYSICAL    = "physical"
SPECTRAL    = "spectral"
TO_SPECTRAL = "to_spectral"
TO_PHYSICAL = "to_physical"


# ── Smooth step ───────────────────────────────────────────────────────────────

def _theta(s):
    s   = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos])
    return out


def smooth_step(s):
    """
    C^infinity step: 0 for s <= 0, 1 for s >= 1, monotone in between,
    smooth_step(s) + smooth_step(1 - s) = 1. Max slope 2 at s = 1/2.
    """
    arr = np.asarray(s, dtype=float)
    a   = _theta(arr)
    b   = _theta(1.0 - arr)
    out = a / (a + b)
    if out.ndim == 0:
        return float(out)
    return out


# ── Grid ──────────────────────────────────────────────────────────────────────

def _is_power_of_two(n):
    return n >= 1 and (n & (n - 1)) == 0


def _readonly(arr):
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Grid:
    L: float
    M: int

    def __post_init__(self):
        if not np.isfinite(self.L) or self.L <= 0:
            raise ConfigurationError(f"grid length must be positive and finite, got {self.L}")
        if isinstance(self.M, bool) or int(self.M) != self.M:
            raise ConfigurationError(f"grid points must be an integer, got {self.M}")
        if not _is_power_of_two(int(self.M)) or self.M < 8:
            raise ConfigurationError(f"grid points must be a power of two >= 8, got {self.M}")
        object.__setattr__(self, "L", float(self.L))
        object.__setattr__(self, "M", int(self.M))

    @property
    def dx(self):
        return self.L / self.M

    @cached_property
    def x(self):
        return _readonly(-self.L / 2 + self.dx * np.arange(self.M))

    @cached_property
    def k(self):
        """Integer wavenumbers in FFT order."""
        return _readonly(np.rint(sfft.fftfreq(self.M, 1.0 / self.M)).astype(int))

    @cached_property
    def xi(self):
        return _readonly(2 * np.pi * self.k / self.L)

    @property
    def lattice(self):
        """Frequencies in ascending order."""
        return 2 * np.pi * np.arange(-self.M // 2, self.M // 2) / self.L

    @property
    def nyquist(self):
        return np.pi / self.dx


def make_grid(L, M):
    return Grid(L, M)


def same_grid(a, b):
    if a != b:
        raise ConfigurationError(f"grid mismatch: {a} vs {b}")
    return a


# ── Fields ────────────────────────────────────────────────────────────────────

def _check_finite(values, what="field"):
    if not np.all(np.isfinite(values)):
        raise NumericError(f"non-finite values in {what}")


@dataclass(frozen=True, eq=False)
class ComplexField:
    grid:           Grid
    values:         np.ndarray
    representation: str = PHYSICAL

    def __post_init__(self):
        if self.representation not in (PHYSICAL, SPECTRAL):
            raise ConfigurationError(f"unknown representation '{self.representation}'")
        values = np.array(self.values, dtype=complex)
        if values.shape != (self.grid.M,):
            raise ConfigurationError(
                f"field has shape {values.shape}, grid expects ({self.grid.M},)"
            )
        _check_finite(values)
        object.__setattr__(self, "values", _readonly(values))

    def physical(self):
        if self.representation == PHYSICAL:
            return self.values
        return sfft.ifft(self.values, norm="ortho")

    def spectral(self):
        if self.representation == SPECTRAL:
            return self.values
        return sfft.fft(self.values, norm="ortho")

    def to_physical(self):
        if self.representation == PHYSICAL:
            return self
        return transform(self, TO_PHYSICAL)

    def to_spectral(self):
        if self.representation == SPECTRAL:
            return self
        return transform(self, TO_SPECTRAL)

    def _combine(self, other, sign):
        same_grid(self.grid, other.grid)
        return ComplexField(self.grid, self.physical() + sign * other.physical())

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def scaled(self, c):
        return ComplexField(self.grid, c * self.values, self.representation)

    def multiplied(self, weights):
        return ComplexField(self.grid, self.physical() * np.asarray(weights))


def field_from_function(grid, fn):
    return ComplexField(grid, fn(grid.x))


def zeros(grid):
    return ComplexField(grid, np.zeros(grid.M, dtype=complex))


def transform(f, direction):
    if direction == TO_SPECTRAL:
        if f.representation != PHYSICAL:
            raise ConfigurationError("representation mismatch: field is already spectral")
        return ComplexField(f.grid, sfft.fft(f.values, norm="ortho"), SPECTRAL)
    if direction == TO_PHYSICAL:
        if f.representation != SPECTRAL:
            raise ConfigurationError("representation mismatch: field is already physical")
        return ComplexField(f.grid, sfft.ifft(f.values, norm="ortho"), PHYSICAL)
    raise ConfigurationError(f"unknown transform direction '{direction}'")


# ── Multipliers ───────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class MultiplierSymbol:
    name: str
    rule: Callable[[np.ndarray], np.ndarray]

    def __call__(self, xi):
        return np.asarray(self.rule(np.asarray(xi, dtype=float)))

    def on(self, grid):
        values = np.broadcast_to(self(grid.xi), (grid.M,))
        _check_finite(values, f"symbol '{self.name}'")
        return values


def _check_cutoff(N):
    if not np.isfinite(N) or N <= 0:
        raise ConfigurationError(f"frequency cutoff must be positive and finite, got {N}")


def low_pass_symbol(N):
    """m(xi/N) with m(xi) = smooth_step(2 - |xi|): 1 on |xi| <= N, 0 on |xi| >= 2N."""
    _check_cutoff(N)
    return MultiplierSymbol(f"low_pass({N})", lambda xi: smooth_step(2.0 - np.abs(xi) / N))


def high_pass_symbol(N):
    _check_cutoff(N)
    return MultiplierSymbol(f"high_pass({N})", lambda xi: 1.0 - smooth_step(2.0 - np.abs(xi) / N))


def band_symbol(N):
    """Littlewood-Paley piece m(xi/N) - m(2 xi/N)."""
    _check_cutoff(N)
    return MultiplierSymbol(
        f"band({N})",
        lambda xi: smooth_step(2.0 - np.abs(xi) / N) - smooth_step(2.0 - 2.0 * np.abs(xi) / N),
    )


def sharp_symbol(band):
    """Indicator of |xi| <= band."""
    return MultiplierSymbol(f"sharp({band})", lambda xi: (np.abs(xi) <= band * (1 + 1e-12)).astype(float))


def free_phase_symbol(t):
    return MultiplierSymbol(f"free_phase({t})", lambda xi: np.exp(-1j * xi**2 * t))


def inverse_half_derivative_symbol(L):
    """|xi|^(-1/2), with the zero mode given the weight of the lowest nonzero mode."""
    floor = 2 * np.pi / L
    return MultiplierSymbol(
        "inverse_half_derivative", lambda xi: np.maximum(np.abs(xi), floor) ** -0.5
    )


def apply_symbol(f, m):
    return ComplexField(f.grid, f.spectral() * m.on(f.grid), SPECTRAL)


def lp_project(f, N, kind="low"):
    builders = {"low": low_pass_symbol, "high": high_pass_symbol, "band": band_symbol}
    if kind not in builders:
        raise ConfigurationError(f"unknown projection kind '{kind}'")
    return apply_symbol(f, builders[kind](N))


def free_evolve(f, t):
    if not np.isfinite(t):
        raise ConfigurationError(f"evolution time must be finite, got {t}")
    return apply_symbol(f, free_phase_symbol(t))


def pairing(l, u):
    """<l, u> = dx * sum(conj(l) * u)."""
    same_grid(l.grid, u.grid)
    return complex(l.grid.dx * np.vdot(l.physical(), u.physical()))


def symplectic_form(u, v):
    """omega(u, v) = Im <v, u>; antisymmetric."""
    return pairing(v, u).imag


def spectral_derivative(values, grid, order=1):
    """d^order/dx^order of physical samples along the last axis (Nyquist mode dropped)."""
    symbol = (1j * grid.xi) ** order
    if order > 0:
        symbol = np.where(grid.k == -grid.M // 2, 0.0, symbol)
    return sfft.ifft(symbol * sfft.fft(values, axis=-1, norm="ortho"), axis=-1, norm="ortho")


# ── Torus <-> line surrogate ──────────────────────────────────────────────────

def surrogate_ratio(torus, line):
    kappa = line.M // torus.M
    if kappa < 1 or line.M != kappa * torus.M or not np.isclose(line.L, kappa * torus.L, rtol=1e-12):
        raise ConfigurationError(
            f"line grid ({line.L}, {line.M}) is not an integer multiple of torus ({torus.L}, {torus.M})"
        )
    return kappa


def _offset(torus, kappa):
    return (kappa - 1) * torus.M // 2


def extend_values(values, torus, line):
    """Periodic extension of torus samples (..., M) onto the line grid."""
    kappa = surrogate_ratio(torus, line)
    tiled = np.tile(values, (1,) * (np.ndim(values) - 1) + (kappa,))
    return np.roll(tiled, _offset(torus, kappa), axis=-1)


def fold_values(values, torus, line):
    """Periodization of line samples (..., kappa*M) onto the torus; adjoint of extend_values."""
    kappa  = surrogate_ratio(torus, line)
    rolled = np.roll(values, -_offset(torus, kappa), axis=-1)
    return rolled.reshape(rolled.shape[:-1] + (kappa, torus.M)).sum(axis=-2)


def extend_periodic(f, line):
    return ComplexField(line, extend_values(f.physical(), f.grid, line))


def fold_to_torus(g, torus):
    return ComplexField(torus, fold_values(g.physical(), torus, g.grid))
