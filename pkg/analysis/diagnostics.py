"""
Conserved quantities and space-time norms of trajectories.

Time integrals use the left-endpoint rectangle rule on the stored snapshots:
snapshots 0..S-2 of the window each carry weight `spacing`. Spatial windows
[-R, R) are half-open.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft
from sklearn.linear_model import LinearRegression

from analysis.dynamics import nonlinearity_samples
from analysis.errors import ConfigurationError, NumericError
from analysis.spectral import ComplexField, inverse_half_derivative_symbol, low_pass_symbol, symplectic_form

logger = logging.getLogger(__name__)


# ── Conserved quantities ──────────────────────────────────────────────────────

def mass(f):
    return float(f.grid.dx * np.sum(np.abs(f.physical()) ** 2))


def l2_norm(f):
    return math.sqrt(mass(f))


def energy(f, cfg):
    """1/2 int |u_x|^2 + sigma*coupling/4 int |P u|^4."""
    grid    = f.grid
    u_hat   = f.spectral()
    # unitary transform: dx * sum |u_x|^2 = dx * sum |xi u_hat|^2
    kinetic = 0.5 * grid.dx * float(np.sum(grid.xi**2 * np.abs(u_hat) ** 2))
    pu = f.physical() if not cfg.projected else sfft.ifft(low_pass_symbol(cfg.N).on(grid) * u_hat, norm="ortho")
    potential = 0.25 * cfg.sigma * cfg.coupling * grid.dx * float(np.sum(np.abs(pu) ** 4))
    return kinetic + potential


# ── Windows ───────────────────────────────────────────────────────────────────

def _time_indices(traj, window):
    times = traj.times
    if window is None:
        idx = np.arange(len(traj))
    else:
        t1, t2 = window
        tol = 1e-9 * max(1.0, abs(t1), abs(t2))
        idx = np.flatnonzero((times >= t1 - tol) & (times <= t2 + tol))
    if idx.size < 2:
        raise ConfigurationError("time window holds fewer than 2 snapshots")
    return idx


def _space_mask(grid, R):
    if R is None:
        return np.ones(grid.M, dtype=bool)
    if R > grid.L / 2:
        raise ConfigurationError(f"spatial window R={R} exceeds half the grid length {grid.L / 2}")
    mask = (grid.x >= -R) & (grid.x < R)
    if not mask.any():
        raise ConfigurationError(f"spatial window R={R} holds no grid points")
    return mask


def _time_norm(values, spacing, q):
    """L^q over the window of per-snapshot values (left-endpoint rule)."""
    if math.isinf(q):
        return float(np.max(values))
    return float((spacing * np.sum(values[:-1] ** q)) ** (1.0 / q))


def _space_norms(samples, dx, r):
    a = np.abs(samples)
    if math.isinf(r):
        return np.max(a, axis=-1)
    return (dx * np.sum(a**r, axis=-1)) ** (1.0 / r)


# ── Norms ─────────────────────────────────────────────────────────────────────

def strichartz_norm(traj, window=None):
    """||u||_{L^inf L^2} + ||u||_{L^4 L^inf} over the window."""
    idx     = _time_indices(traj, window)
    samples = traj.samples[idx]
    sup_l2  = _space_norms(samples, traj.grid.dx, 2.0)
    sup_inf = _space_norms(samples, traj.grid.dx, math.inf)
    return float(np.max(sup_l2)) + _time_norm(sup_inf, traj.spacing, 4.0)


def spacetime_lp_norm(traj, p, window=None, R=None):
    """
    p is a number (L^p_{t,x}) or a pair (q, r) (L^q_t L^r_x), restricted to
    the time window and to [-R, R).
    """
    q, r = (p, p) if np.isscalar(p) else p
    for v in (q, r):
        if not (math.isinf(v) or v >= 1):
            raise ConfigurationError(f"exponent must be >= 1, got {v}")
    idx     = _time_indices(traj, window)
    mask    = _space_mask(traj.grid, R)
    samples = traj.samples[np.ix_(idx, np.flatnonzero(mask))]
    return _time_norm(_space_norms(samples, traj.grid.dx, r), traj.spacing, q)


def _half_derivative_l2(values_hat, grid):
    sym = inverse_half_derivative_symbol(grid.L).on(grid)
    return np.sqrt(grid.dx * np.sum(np.abs(sym * values_hat) ** 2, axis=-1))


def local_smoothing_ratio(traj, R):
    """
    ||u||_{L^2([-R,R) x window)} divided by
    sqrt(R) * (|| |grad|^{-1/2} u(t_start) ||_2 + int || |grad|^{-1/2} G(t) ||_2 dt),
    with G the nonlinearity plus forcing recorded in the trajectory.
    """
    lhs   = spacetime_lp_norm(traj, 2.0, R=R)
    grid  = traj.grid
    u_hat = sfft.fft(traj.samples[0], norm="ortho")
    g_hat = nonlinearity_samples(traj)
    g_l2  = _half_derivative_l2(g_hat, grid)
    rhs   = math.sqrt(R) * (float(_half_derivative_l2(u_hat, grid)) + traj.spacing * float(np.sum(g_l2[:-1])))
    if rhs == 0.0:
        return 0.0
    return lhs / rhs


def tilde_s_norm(traj):
    """||u||_{L^inf L^2} + ||P F(P u)||_{L^2_{t,x}}."""
    dx     = traj.grid.dx
    sup_l2 = float(np.max(_space_norms(traj.samples, dx, 2.0)))
    g_l2   = np.sqrt(np.sum(np.abs(nonlinearity_samples(traj)) ** 2, axis=-1) * dx)
    return sup_l2 + _time_norm(g_l2, traj.spacing, 2.0)


def equicontinuity_modulus(traj, tau, y, R, T):
    """
    ||u(t + tau, x + y) - u(t, x)||_{L^2_{t,x}([-T, T] x [-R, R))}.
    The trajectory must cover [-T - |tau|, T + |tau|] with spacing <= |tau|/10;
    the time shift uses the snapshot nearest to tau.
    """
    if abs(tau) > T:
        raise ConfigurationError(f"|tau| = {abs(tau)} exceeds T = {T}")
    h = traj.spacing
    if tau != 0 and h > abs(tau) / 10 * (1 + 1e-9):
        raise ConfigurationError(
            f"insufficient snapshot density: spacing {h} > |tau|/10 = {abs(tau) / 10}"
        )
    times = traj.times
    reach = T + abs(tau)
    tol   = 1e-9 * max(1.0, reach)
    if times[0] > -reach + tol or times[-1] < reach - tol:
        raise ConfigurationError(
            f"trajectory covers [{times[0]}, {times[-1]}], needs [{-reach}, {reach}]"
        )

    idx   = _time_indices(traj, (-T, T))
    # nearest snapshot; the density check bounds the offset by |tau|/20
    shift = int(round(tau / h))
    idx   = idx[(idx + shift >= 0) & (idx + shift < len(times))]

    grid    = traj.grid
    mask    = _space_mask(grid, R)
    later   = traj.samples[idx + shift]
    if y != 0:
        later = sfft.ifft(np.exp(1j * grid.xi * y) * sfft.fft(later, axis=-1, norm="ortho"), axis=-1, norm="ortho")
    diff    = (later - traj.samples[idx])[:, mask]
    per_t   = _space_norms(diff, grid.dx, 2.0)
    return _time_norm(per_t, h, 2.0)


# ── Operators and fits ────────────────────────────────────────────────────────

def operator_norm(A, tol=1e-12, max_iter=20000, seed=0, atol=1e-15):
    """
    Largest singular value of a LinearOperator by power iteration on A*A.
    The Rayleigh quotients are nondecreasing in exact arithmetic, so iteration
    stops once a step gains less than tol (relative); roundoff-level operators
    whose quotients wander downward stop at once. Norms below atol count as zero.
    """
    rng = np.random.default_rng(seed)
    n   = A.shape[1]
    x   = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    x  /= np.linalg.norm(x)
    prev = 0.0
    for it in range(1, max_iter + 1):
        z     = A.rmatvec(A.matvec(x))
        value = float(np.vdot(x, z).real)
        nz    = np.linalg.norm(z)
        if not np.isfinite(nz):
            raise NumericError("power iteration produced non-finite values", last_iterate=x)
        if nz == 0.0:
            return 0.0
        best = max(value, prev)
        if best <= atol * atol or value - prev <= tol * best:
            logger.debug("operator_norm stopped after %d iterations", it)
            return math.sqrt(max(best, 0.0))
        prev = value
        x    = z / nz
    raise NumericError(
        f"power iteration did not converge in {max_iter} iterations", last_iterate=x
    )


def symplectic_defect(flow, u0, a, b, grid, h=1e-5):
    """
    |omega(D phi a, D phi b) - omega(a, b)| / (||a|| ||b||) at u0, where
    flow maps a batch of physical values (B, M) to its image under phi.
    The derivative is a central difference of step h, all four points in one call.
    """
    u0, a, b = (np.asarray(v, dtype=complex) for v in (u0, a, b))
    scale = grid.dx * float(np.linalg.norm(a) * np.linalg.norm(b))
    if scale == 0.0:
        raise ConfigurationError("symplectic defect needs non-zero directions")
    out = np.asarray(flow(np.stack([u0 + h * a, u0 - h * a, u0 + h * b, u0 - h * b])))
    Da  = ComplexField(grid, (out[0] - out[1]) / (2 * h))
    Db  = ComplexField(grid, (out[2] - out[3]) / (2 * h))
    before = symplectic_form(ComplexField(grid, a), ComplexField(grid, b))
    return abs(symplectic_form(Da, Db) - before) / scale


def loglog_slope(x, y):
    """Least-squares slope of log y against log x; returns (slope, r2)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or x.size != y.size:
        raise ConfigurationError("loglog_slope needs two equal-length series of length >= 2")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ConfigurationError("loglog_slope needs positive values")
    X     = np.log(x).reshape(-1, 1)
    Y     = np.log(y)
    model = LinearRegression().fit(X, Y)
    return float(model.coef_[0]), float(model.score(X, Y))


# ── Report ────────────────────────────────────────────────────────────────────

@dataclass
class NormReport:
    window: tuple
    R:      float
    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]


def norm_report(traj, R):
    cfg = traj.config
    if cfg is None:
        raise ConfigurationError("norm_report needs a trajectory with a solver config")
    u0 = traj.initial
    values = {
        "mass":                  mass(u0),
        "energy":                energy(u0, cfg),
        "s_norm":                strichartz_norm(traj),
        "l6_norm":               spacetime_lp_norm(traj, 6.0),
        "local_smoothing_ratio": local_smoothing_ratio(traj, R),
        "tilde_s_norm":          tilde_s_norm(traj),
    }
    return NormReport((float(traj.times[0]), float(traj.times[-1])), R, values)
