"""
Spatial localization: pigeonhole choice of a low-mass subinterval and the
nested cutoff family chi^0..chi^4 built around it.

With w = N*T/eta and c the center of the selected subinterval, chi^j is
smooth_step((x - a_j)/w) * smooth_step((b_j - x)/w) where
a_j = c - L + (9 - 2j) w and b_j = c - (9 - 2j) w, so
  - chi^j = 1 on [a_j + w, b_j - w] (its plateau)
  - chi^j = 0 outside (a_j, b_j)
  - supp chi^j lies inside the plateau of chi^(j+1) (nesting is exact)
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from analysis.errors import ConfigurationError, InvariantViolation
from analysis.reports import ExperimentReport
from analysis.spectral import ComplexField, smooth_step, spectral_derivative

logger = logging.getLogger(__name__)

LEVELS = range(5)


# ── Pigeonhole ────────────────────────────────────────────────────────────────

def subinterval_length(eta, N, T):
    return 20.0 * N * T / eta


def subinterval_count(L, eta, N, T):
    return int(math.floor((L / 4) / subinterval_length(eta, N, T) + 1e-9))


def required_count(M_bound, eta):
    return max(1.0, 16.0 * M_bound**2 / eta)


def guard_length(M_bound, eta, N, T):
    """Smallest torus length whose right quarter holds enough subintervals."""
    return 4.0 * subinterval_length(eta, N, T) * math.ceil(required_count(M_bound, eta) - 1e-12)


def _check_positive(**values):
    for name, v in values.items():
        if not (np.isfinite(v) and v > 0):
            raise ConfigurationError(f"{name} must be positive and finite, got {v}")


@dataclass(frozen=True)
class IntervalSelection:
    center:        float
    half_length:   float
    index:         int
    count:         int
    boundary_mass: float
    circumference: float
    eta:           float
    N:             float
    T:             float

    @property
    def width(self):
        return self.N * self.T / self.eta

    @property
    def bounds(self):
        return (self.center - self.half_length, self.center + self.half_length)


def pigeonhole_interval(u0, eta, N, T, M_bound):
    """
    Scans the subintervals [a, a + 20NT/eta) of [L/4, L/2] left to right and
    returns the first whose local L^2 norm is <= eta^(1/2)/4.
    """
    _check_positive(eta=eta, N=N, T=T, M_bound=M_bound)
    grid = u0.grid
    norm = math.sqrt(grid.dx * float(np.sum(np.abs(u0.physical()) ** 2)))
    if norm > M_bound * (1 + 1e-12):
        raise ConfigurationError(f"||u0|| = {norm:.6g} exceeds M_bound = {M_bound}")

    length = subinterval_length(eta, N, T)
    K      = subinterval_count(grid.L, eta, N, T)
    need   = required_count(M_bound, eta)
    if K < need:
        raise ConfigurationError(
            f"torus too short: {K} subintervals of length {length:g} fit in [L/4, L/2], "
            f"need at least {need:g} (L >= {guard_length(M_bound, eta, N, T):g})"
        )

    bound   = math.sqrt(eta) / 4
    density = np.abs(u0.physical()) ** 2
    for i in range(K):
        a    = grid.L / 4 + i * length
        mask = (grid.x >= a) & (grid.x < a + length)
        local = math.sqrt(grid.dx * float(np.sum(density[mask])))
        if local <= bound:
            logger.info(
                "pigeonhole: subinterval %d/%d [%g, %g) local norm %.3e <= %.3e",
                i, K, a, a + length, local, bound,
            )
            return IntervalSelection(
                center=a + length / 2, half_length=length / 2, index=i, count=K,
                boundary_mass=local, circumference=grid.L, eta=eta, N=N, T=T,
            )
    raise InvariantViolation(
        f"no subinterval among {K} has local norm <= {bound:.3e}; total mass bound violated"
    )


# ── Cutoff family ─────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class CutoffFamily:
    grid:      object
    j:         int
    values:    np.ndarray
    plateau:   tuple
    support:   tuple
    selection: IntervalSelection

    @property
    def width(self):
        return self.selection.width

    def field(self):
        return ComplexField(self.grid, self.values)

    def apply(self, f):
        return f.multiplied(self.values)

    def complement(self, f):
        return f.multiplied(1.0 - self.values)


def cutoff_profile(x, sel, j):
    """Unperiodized chi^j at the points x."""
    w  = sel.width
    a0 = sel.center - sel.circumference + (9 - 2 * j) * w
    b0 = sel.center - (9 - 2 * j) * w
    return smooth_step((np.asarray(x) - a0) / w) * smooth_step((b0 - np.asarray(x)) / w)


def build_cutoff(sel, j, grid, N=None, T=None, eta=None):
    """
    chi^j sampled on `grid`: the torus itself or any line surrogate whose
    length is an integer multiple of the selection's torus.
    """
    if j not in LEVELS:
        raise ConfigurationError(f"cutoff level must be in 0..4, got {j}")
    if any(v is not None for v in (N, T, eta)):
        sel = IntervalSelection(
            center=sel.center, half_length=sel.half_length, index=sel.index,
            count=sel.count, boundary_mass=sel.boundary_mass,
            circumference=sel.circumference,
            eta=sel.eta if eta is None else eta,
            N=sel.N if N is None else N,
            T=sel.T if T is None else T,
        )
    w  = sel.width
    a0 = sel.center - sel.circumference + (9 - 2 * j) * w
    b0 = sel.center - (9 - 2 * j) * w
    if b0 - a0 < 2 * w:
        raise ConfigurationError(
            f"cutoff chi^{j} has an empty plateau: torus length {sel.circumference:g} "
            f"too short for transition width {w:g}"
        )

    values = sum(cutoff_profile(grid.x + s * grid.L, sel, j) for s in range(-2, 3))
    values = np.minimum(values, 1.0)
    if not np.any(values == 1.0):
        raise ConfigurationError(f"no grid point lies in the plateau of chi^{j}; refine the grid")
    values.flags.writeable = False
    return CutoffFamily(grid, j, values, (a0 + w, b0 - w), (a0, b0), sel)


def nesting_defect(inner, outer):
    """max |chi^j chi^i - chi^j|; zero when inner's support sits in outer's plateau."""
    return float(np.max(np.abs(inner.values * outer.values - inner.values)))


def cutoff_derivatives(fam, k_max):
    if not 0 <= k_max <= 4:
        raise ConfigurationError(f"derivative order must be in 0..4, got {k_max}")
    return [float(np.max(np.abs(spectral_derivative(fam.values, fam.grid, k)))) for k in range(k_max + 1)]


def cutoff_report(fam, k_max):
    """
    max |d^k chi| for k = 0..k_max, raw and rescaled by (NT)^k and w^k.
    The rescaled-by-w values are bounded by constants of the smooth step alone.
    """
    derivs = cutoff_derivatives(fam, k_max)
    nt     = fam.selection.N * fam.selection.T
    w      = fam.width

    report = ExperimentReport(name="cutoff")
    report.add_series("order",          list(range(k_max + 1)))
    report.add_series("max_derivative", derivs)
    report.add_series("scaled_nt",      [d * nt**k for k, d in enumerate(derivs)])
    report.add_series("scaled_width",   [d * w**k for k, d in enumerate(derivs)])
    report.add_series("low_order_scaled_width", [d * w**k for k, d in enumerate(derivs[:3])])
    report.add_verdict("derivative_scaling", "at_most:low_order_scaled_width:30")
    report.flag("level", fam.j)
    return report
