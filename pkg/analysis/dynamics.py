"""
Pseudospectral solver for (i d_t + Laplacian) u = P F(P u) [+ e].

F(u) = sigma * coupling * |u|^2 u. P is the identity ("none") or the smooth
low-pass projection P_{<=N} ("line" / "torus", which only differ in the grid
they run on). Strang splitting: half free step, nonlinear substep, half free
step. The nonlinear substep is the exact phase rotation for P = Id and
classical RK4 in spectral space otherwise; RK4 is also used whenever a
forcing term is present.

Internals work on spectral arrays of shape (..., M) so batches of fields
can be evolved together.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy import fft as sfft

from analysis.errors import ConfigurationError, NumericError
from analysis.spectral import ComplexField, Grid, SPECTRAL, low_pass_symbol

logger = logging.getLogger(__name__)

TRUNCATIONS = ("none", "line", "torus")
EXACT_PHASE = "strang-exact-phase"
RK4         = "strang-rk4"


# ── Configuration ─────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class SolverConfig:
    sigma:      int = 1
    truncation: str = "none"
    N:          Optional[float] = None
    dt:         float = 1e-3
    T:          float = 1.0
    stride:     int = 1
    integrator: Optional[str] = None
    coupling:   float = 1.0
    symmetric:  bool = False
    norm_cap:   float = 4.0

    def __post_init__(self):
        if self.sigma not in (1, -1):
            raise ConfigurationError(f"sigma must be +1 or -1, got {self.sigma}")
        if self.truncation not in TRUNCATIONS:
            raise ConfigurationError(f"truncation must be one of {TRUNCATIONS}, got '{self.truncation}'")
        if self.truncation != "none":
            if self.N is None or not np.isfinite(self.N) or self.N <= 0:
                raise ConfigurationError(f"truncation '{self.truncation}' needs a positive cutoff N")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if not (np.isfinite(self.T) and self.T > 0):
            raise ConfigurationError(f"T must be positive, got {self.T}")
        if self.dt > self.T:
            raise ConfigurationError(f"dt ({self.dt}) must not exceed T ({self.T})")
        if int(self.stride) != self.stride or self.stride < 1:
            raise ConfigurationError(f"stride must be a positive integer, got {self.stride}")
        if not np.isfinite(self.coupling):
            raise ConfigurationError("coupling must be finite")
        if not (self.norm_cap > 0):
            raise ConfigurationError("norm_cap must be positive")

        expected = EXACT_PHASE if self.truncation == "none" else RK4
        if self.integrator is None:
            object.__setattr__(self, "integrator", expected)
        elif self.integrator not in (EXACT_PHASE, RK4):
            raise ConfigurationError(f"unknown integrator '{self.integrator}'")
        elif self.integrator != expected:
            raise ConfigurationError(
                f"truncation '{self.truncation}' requires the {expected} integrator, got '{self.integrator}'"
            )

        n = self.n_steps
        if n % self.stride != 0:
            raise ConfigurationError(
                f"stride {self.stride} does not divide the step count {n}"
            )

    @property
    def projected(self):
        return self.truncation != "none"

    @property
    def n_steps(self):
        return max(1, math.ceil(self.T / self.dt - 1e-9))

    @property
    def step_size(self):
        return self.T / self.n_steps


# ── Propagator ────────────────────────────────────────────────────────────────

def _fft(a):
    return sfft.fft(a, axis=-1, norm="ortho")


def _ifft(a):
    return sfft.ifft(a, axis=-1, norm="ortho")


class _Flow:
    """Precomputed symbols for one (grid, config, signed step) triple."""

    def __init__(self, grid, cfg, h, forcing_hat=None):
        self.grid       = grid
        self.cfg        = cfg
        self.h          = h
        self.gain       = cfg.sigma * cfg.coupling
        self.half_phase = np.exp(-1j * grid.xi**2 * h / 2)
        self.mask       = low_pass_symbol(cfg.N).on(grid) if cfg.projected else None
        self.forcing    = forcing_hat
        self.use_rk4    = cfg.integrator == RK4 or forcing_hat is not None

    def nonlinearity_hat(self, u_hat):
        """Spectral coefficients of P F(P u) (+ e)."""
        pu  = _ifft(u_hat if self.mask is None else self.mask * u_hat)
        out = _fft(self.gain * np.abs(pu) ** 2 * pu)
        if self.mask is not None:
            out = self.mask * out
        if self.forcing is not None:
            out = out + self.forcing
        return out

    def _rhs(self, u_hat):
        return -1j * self.nonlinearity_hat(u_hat)

    def nonlinear_substep(self, u_hat):
        h = self.h
        if not self.use_rk4:
            u = _ifft(u_hat)
            return _fft(u * np.exp(-1j * self.gain * np.abs(u) ** 2 * h))
        k1 = self._rhs(u_hat)
        k2 = self._rhs(u_hat + 0.5 * h * k1)
        k3 = self._rhs(u_hat + 0.5 * h * k2)
        k4 = self._rhs(u_hat + h * k3)
        return u_hat + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)

    def step(self, u_hat):
        u_hat = self.half_phase * u_hat
        u_hat = self.nonlinear_substep(u_hat)
        return self.half_phase * u_hat


def _check_norm(u0, cfg):
    norm = math.sqrt(u0.grid.dx * float(np.sum(np.abs(u0.physical()) ** 2)))
    if norm > cfg.norm_cap * (1 + 1e-12):
        raise ConfigurationError(
            f"initial data norm {norm:.6g} exceeds solver cap {cfg.norm_cap}"
        )


def _forcing_hat(forcing, grid):
    if forcing is None:
        return None
    if forcing.grid != grid:
        raise ConfigurationError("forcing lives on a different grid")
    return np.asarray(forcing.spectral())


def _integrate(u_hat, grid, cfg, direction, forcing_hat=None, keep=True):
    """
    Runs n_steps signed steps. Returns the physical snapshots every `stride`
    steps (including t = 0) when keep is set, else only the final spectral state.
    """
    h       = direction * cfg.step_size
    flow    = _Flow(grid, cfg, h, forcing_hat)
    n       = cfg.n_steps
    samples = [_ifft(u_hat)] if keep else None
    report  = max(1, n // 10)

    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(1, n + 1):
            u_hat = flow.step(u_hat)
            if not np.all(np.isfinite(u_hat)):
                raise NumericError(
                    f"non-finite field at step {i} (t={i * h:.6g})", step=i, time=i * h
                )
            if keep and i % cfg.stride == 0:
                samples.append(_ifft(u_hat))
            if i % report == 0:
                logger.debug("step %d/%d (%.0f%%)", i, n, 100.0 * i / n)

    if keep:
        return np.stack(samples, axis=-2)
    return u_hat


# ── Trajectory ────────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class Trajectory:
    """Snapshots u(t0 + s*spacing), s = 0..S-1, physical samples of shape (S, M)."""
    grid:       Grid
    samples:    np.ndarray
    t0:         float = 0.0
    spacing:    float = 0.0
    config:     Optional[SolverConfig] = None
    mass_drift: float = 0.0
    forcing:    Optional[ComplexField] = None

    def __post_init__(self):
        samples = np.array(self.samples, dtype=complex)
        if samples.ndim != 2 or samples.shape[1] != self.grid.M:
            raise ConfigurationError(f"samples of shape {samples.shape} do not fit grid M={self.grid.M}")
        if not np.all(np.isfinite(samples)):
            raise NumericError("non-finite values in trajectory")
        if samples.shape[0] >= 2 and not self.spacing > 0:
            raise ConfigurationError("snapshot times must be strictly increasing")
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.shape[0]

    @property
    def times(self):
        return self.t0 + self.spacing * np.arange(len(self))

    def field(self, i):
        return ComplexField(self.grid, self.samples[i])

    @property
    def initial(self):
        return self.field(0)

    @property
    def final(self):
        return self.field(-1)

    def with_samples(self, samples):
        return replace(self, samples=samples)


def _mass_drift(samples, dx):
    masses = dx * np.sum(np.abs(samples) ** 2, axis=-1)
    ref    = masses[0] if masses[0] > 0 else 0.0
    if ref == 0.0:
        return float(np.max(masses))
    return float(np.max(np.abs(masses - ref)) / ref)


# ── Public operations ─────────────────────────────────────────────────────────

def nonlinear_term(u, cfg):
    """P(sigma |P u|^2 P u) as a spectral field."""
    flow = _Flow(u.grid, cfg, cfg.step_size)
    return ComplexField(u.grid, flow.nonlinearity_hat(u.spectral()), SPECTRAL)


def step(u, cfg, forcing=None, backward=False):
    h    = (-1.0 if backward else 1.0) * cfg.step_size
    flow = _Flow(u.grid, cfg, h, _forcing_hat(forcing, u.grid))
    with np.errstate(over="ignore", invalid="ignore"):
        u_hat = flow.step(u.spectral())
    if not np.all(np.isfinite(u_hat)):
        raise NumericError("non-finite field after one step", step=1, time=h)
    return ComplexField(u.grid, u_hat, SPECTRAL).to_physical()


def solve(u0, cfg, forcing=None, backward=False):
    """
    Integrates from t = 0. Forward: times [0, T]. backward=True: times [-T, 0],
    samples in increasing time so `initial` is u(-T). cfg.symmetric (forward
    call): times [-T, T] assembled from a backward and a forward run.
    """
    _check_norm(u0, cfg)
    grid      = u0.grid
    e_hat     = _forcing_hat(forcing, grid)
    u_hat     = np.asarray(u0.spectral())
    spacing   = cfg.step_size * cfg.stride
    span      = cfg.n_steps // cfg.stride

    logger.info(
        "solve: truncation=%s N=%s sigma=%+d T=%g dt=%g M=%d%s",
        cfg.truncation, cfg.N, cfg.sigma, cfg.T, cfg.step_size, grid.M,
        " symmetric" if cfg.symmetric else "",
    )
    if backward:
        samples = _integrate(u_hat, grid, cfg, -1.0, e_hat)[::-1]
        t0      = -span * spacing
    elif cfg.symmetric:
        back    = _integrate(u_hat, grid, cfg, -1.0, e_hat)[::-1]
        fwd     = _integrate(u_hat, grid, cfg, 1.0, e_hat)
        samples = np.concatenate([back, fwd[1:]], axis=0)
        t0      = -span * spacing
    else:
        samples = _integrate(u_hat, grid, cfg, 1.0, e_hat)
        t0      = 0.0

    drift = _mass_drift(samples, grid.dx)
    logger.info("solve done: %d snapshots, relative mass drift %.3e", samples.shape[0], drift)
    return Trajectory(grid, samples, t0, spacing, cfg, drift, forcing)


def flow_map(values, grid, cfg, forcing=None):
    """Physical values at time T for a batch of physical data (..., M); no snapshots kept."""
    u_hat = _fft(np.asarray(values, dtype=complex))
    final = _integrate(u_hat, grid, cfg, 1.0, _forcing_hat(forcing, grid), keep=False)
    return _ifft(final)


def nonlinearity_samples(traj):
    """Spectral coefficients of P F(P u(t_s)) (+ e) for every snapshot, shape (S, M)."""
    if traj.config is None:
        raise ConfigurationError("trajectory carries no solver config")
    flow = _Flow(traj.grid, traj.config, traj.config.step_size, _forcing_hat(traj.forcing, traj.grid))
    return flow.nonlinearity_hat(_fft(traj.samples))


def duhamel_residual(traj):
    """
    Relative mismatch between u(t_end) and
    e^{-i xi^2 D} u(t_start) - i int e^{-i xi^2 (t_end - s)} N(s) ds,
    trapezoid rule over the stored snapshots.
    """
    if len(traj) < 3:
        raise ConfigurationError("duhamel residual needs at least 3 snapshots")
    xi     = traj.grid.xi
    times  = traj.times
    t_end  = times[-1]
    n_hat  = nonlinearity_samples(traj)
    w      = np.full(len(traj), traj.spacing)
    w[0]   = w[-1] = traj.spacing / 2

    u_start = _fft(traj.samples[0])
    kernel  = np.exp(-1j * np.outer(t_end - times, xi**2))
    pred    = np.exp(-1j * xi**2 * (t_end - times[0])) * u_start
    pred    = pred - 1j * np.sum(w[:, None] * kernel * n_hat, axis=0)

    diff  = np.linalg.norm(_fft(traj.samples[-1]) - pred)
    scale = np.linalg.norm(u_start)
    return float(diff / scale) if scale > 0 else float(diff)


def convergence_order(u0, cfg, dts, reference_dt):
    """
    Global error at T against a fine reference run, for each dt in dts.
    Returns (dts, errors); the slope is read off with diagnostics.loglog_slope.
    """
    ref = flow_map(u0.physical(), u0.grid, replace(cfg, dt=reference_dt, stride=1, symmetric=False))
    errors = []
    for dt in dts:
        out = flow_map(u0.physical(), u0.grid, replace(cfg, dt=dt, stride=1, symmetric=False))
        errors.append(math.sqrt(u0.grid.dx) * float(np.linalg.norm(out - ref)))
    return list(dts), errors
