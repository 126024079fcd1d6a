"""
Finite-dimensional witness search.

Maximizes J(u0) = |<l~, u(T)> - alpha| over the ball
B = {u0 in H : ||u0 - c|| <= R - 4 delta}, c = P_{<=N} z~*, where H is
spanned by the lattice modes with |xi| <= 2N and u(T) is the truncated
torus flow. Coordinates are v_k = sqrt(dx) * c_k on those modes, which makes
the L^2 norm the Euclidean norm of (Re v, Im v).

Gradients are central differences evaluated in one batched flow call.
Ascent is projected onto the ball with step halving when J fails to grow.
Starts are independent (each seeds its own generator), so their order of
completion does not change the report.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

from analysis.diagnostics import l2_norm, symplectic_defect
from analysis.dynamics import SolverConfig, flow_map
from analysis.errors import ConfigurationError, InvariantViolation
from analysis.reports import ExperimentReport
from analysis.spectral import (
    ComplexField,
    apply_symbol,
    lp_project,
    pairing,
    sharp_symbol,
    smooth_step,
)

logger = logging.getLogger(__name__)


# ── Problem ───────────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class WitnessProblem:
    center:         ComplexField
    functional:     ComplexField
    raw_center:     ComplexField
    raw_functional: ComplexField
    alpha:          complex
    r:              float
    R:              float
    delta:          float
    N:              float
    solver:         SolverConfig
    modes:          np.ndarray

    @property
    def grid(self):
        return self.center.grid

    @property
    def radius(self):
        return self.R - 4 * self.delta

    @property
    def dimension(self):
        return 2 * self.modes.size

    @property
    def target(self):
        return self.r + 4 * self.delta


def _spatial_window(grid):
    """1 on |x| <= 3L/8, 0 for |x| >= 7L/16."""
    s = (7 * grid.L / 16 - np.abs(grid.x)) / (grid.L / 16)
    return smooth_step(s)


def mollify(f, band):
    """Sharp truncation to |xi| <= band, then a compactly supported spatial window."""
    truncated = apply_symbol(f, sharp_symbol(band)).to_physical()
    return truncated.multiplied(_spatial_window(f.grid))


def make_witness_problem(z_star, l, alpha, r, R, delta, N, T, *, dt, sigma=1,
                         coupling=1.0, max_params=256):
    if not (0 < r < R):
        raise ConfigurationError(f"radii must satisfy 0 < r < R, got r={r}, R={R}")
    if not (0 <= delta < (R - r) / 8):
        raise ConfigurationError(f"delta must satisfy 0 <= delta < (R - r)/8 = {(R - r) / 8:g}, got {delta}")
    if l2_norm(l) == 0:
        raise ConfigurationError("the test functional must be non-zero")

    grid  = z_star.grid
    modes = np.flatnonzero(np.abs(grid.xi) <= 2 * N * (1 + 1e-12))
    if 2 * modes.size > max_params:
        raise ConfigurationError(
            f"phase space has {2 * modes.size} real parameters, cap is {max_params}"
        )

    z_tilde = mollify(z_star, 2 * N)
    l_tilde = mollify(l, 2 * N)
    l_tilde = l_tilde.scaled(1.0 / l2_norm(l_tilde))

    solver = SolverConfig(
        sigma=sigma, truncation="torus", N=N, dt=dt, T=T, stride=1,
        coupling=coupling, norm_cap=max(4.0, 1.01 * (l2_norm(z_star) + R)),
    )
    center = lp_project(z_tilde, N).to_physical()
    return WitnessProblem(center, l_tilde, z_star, l.scaled(1.0 / l2_norm(l)), complex(alpha),
                          float(r), float(R), float(delta), float(N), solver, modes)


# ── Objective ─────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class OptimizerConfig:
    starts:     int = 8
    iterations: int = 20
    step:       float = 0.0
    fd_eps:     float = 1e-6
    seed:       int = 0
    workers:    int = 1


def to_field_values(problem, coords):
    """Physical u0 for coordinates of shape (..., D)."""
    grid   = problem.grid
    coords = np.atleast_2d(coords)
    d      = problem.modes.size
    coeffs = np.zeros(coords.shape[:-1] + (grid.M,), dtype=complex)
    coeffs[..., problem.modes] = (coords[..., :d] + 1j * coords[..., d:]) / math.sqrt(grid.dx)
    return problem.center.physical() + sfft.ifft(coeffs, axis=-1, norm="ortho")


def objective(problem, coords):
    """J for a batch of coordinate vectors (B, D)."""
    u0 = to_field_values(problem, coords)
    uT = flow_map(u0, problem.grid, problem.solver)
    values = problem.grid.dx * (uT @ np.conj(problem.functional.physical()))
    return np.abs(values - problem.alpha)


def _gradient(problem, x, h):
    D      = x.size
    shifts = np.eye(D) * h
    batch  = np.concatenate([x + shifts, x - shifts])
    J      = objective(problem, batch)
    return (J[:D] - J[D:]) / (2 * h)


def _project(x, radius):
    n = np.linalg.norm(x)
    return x if n <= radius else x * (radius / n)


def _random_start(rng, D, radius):
    direction = rng.standard_normal(D)
    direction /= np.linalg.norm(direction)
    return direction * radius * rng.uniform() ** (1.0 / D)


def _ascend(problem, x, opt):
    radius = problem.radius
    step   = opt.step if opt.step > 0 else radius
    J      = float(objective(problem, x)[0])
    for it in range(opt.iterations):
        g  = _gradient(problem, x, opt.fd_eps)
        ng = np.linalg.norm(g)
        if ng == 0.0:
            break
        candidate = _project(x + step * g / ng, radius)
        Jc = float(objective(problem, candidate)[0])
        if Jc > J:
            x, J = candidate, Jc
        else:
            step /= 2
            if step < 1e-8 * radius:
                break
        logger.debug("ascent iteration %d: J=%.6f step=%.3e", it, J, step)
    return x, J


# ── Search ────────────────────────────────────────────────────────────────────

def _run_start(problem, opt, start):
    rng  = np.random.default_rng([opt.seed, start])
    x, J = _ascend(problem, _random_start(rng, problem.dimension, problem.radius), opt)
    logger.info("witness start %d/%d: J=%.6f (target %.6f)", start + 1, opt.starts, J, problem.target)
    return x, J


def _flow_symplectic_defect(problem, u0, seed):
    """Defect of the flow's symplecticity at u0 along two seeded directions in H."""
    rng        = np.random.default_rng(seed)
    directions = to_field_values(problem, rng.standard_normal((2, problem.dimension))) - problem.center.physical()
    return symplectic_defect(
        lambda batch: flow_map(batch, problem.grid, problem.solver),
        u0.physical(), directions[0], directions[1], problem.grid,
    )


def run_witness_search(problem, opt=None):
    """
    Multi-start projected ascent, starts run on a thread pool. Returns a
    report with the best J per start, the distance of each optimizer from c,
    the margin with the unmollified functional and the symplecticity defect
    of the flow at the optimizer. Failure to reach r + 4 delta is recorded as
    the `stagnated` flag rather than a failing verdict.
    """
    opt    = OptimizerConfig() if opt is None else opt
    radius = problem.radius
    D      = problem.dimension
    report = ExperimentReport(name="witness")

    best_x, best_J = np.zeros(D), float(objective(problem, np.zeros(D))[0])
    if radius > 0:
        with ThreadPoolExecutor(max_workers=opt.workers) as pool:
            results = list(pool.map(lambda start: _run_start(problem, opt, start), range(opt.starts)))
        for x, J in results:
            report.append("start_J", J)
            report.append("distance", float(np.linalg.norm(x)))
            if J > best_J:
                best_x, best_J = x, J

    u0 = ComplexField(problem.grid, to_field_values(problem, best_x)[0])
    distance = l2_norm(u0 - problem.center)
    if distance > radius + 1e-12:
        raise InvariantViolation(f"optimizer left the ball: {distance} > {radius}")

    uT     = ComplexField(problem.grid, flow_map(u0.physical(), problem.grid, problem.solver))
    margin = abs(pairing(problem.raw_functional, uT) - problem.alpha)
    report.add_series("best_J", [best_J])
    report.add_series("target", [problem.target])
    report.add_series("radius", [radius])
    report.add_series("final_distance", [distance])
    report.add_series("margin", [margin])
    report.add_series("symplectic_defect", [_flow_symplectic_defect(problem, u0, opt.seed)])
    z_error = l2_norm(problem.raw_center - mollify(problem.raw_center, 2 * problem.N))
    l_error = l2_norm(problem.raw_functional - problem.functional)
    report.add_series("center_mollification_error", [z_error])
    report.add_series("functional_mollification_error", [l_error])

    report.add_verdict("inside_ball", f"at_most:final_distance:{radius + 1e-12!r}")
    report.add_verdict("flow_symplectic", "at_most:symplectic_defect:1e-06")
    found = best_J > problem.target
    if found:
        report.add_verdict("witness_found", f"at_least:best_J:{problem.target!r}")
    report.flag("stagnated", not found)
    report.flag("margin_exceeds_r", bool(margin > problem.r))
    report.flag("parameters", D)
    return report
