import math

import numpy as np
import pytest
from scipy import fft as sfft
from scipy.linalg import svdvals
from scipy.sparse.linalg import LinearOperator, aslinearoperator

from analysis.data import constant, gaussian, plane_wave, random_band_limited
from analysis.diagnostics import (
    energy,
    equicontinuity_modulus,
    l2_norm,
    local_smoothing_ratio,
    loglog_slope,
    mass,
    norm_report,
    operator_norm,
    spacetime_lp_norm,
    strichartz_norm,
    symplectic_defect,
    tilde_s_norm,
)
from analysis.dynamics import SolverConfig, Trajectory, flow_map, solve
from analysis.errors import ConfigurationError, NumericError
from analysis.spectral import ComplexField, lp_project


def constant_trajectory(grid, c, S=11, spacing=0.1):
    return Trajectory(grid, np.full((S, grid.M), c, dtype=complex), 0.0, spacing)


# ── Conserved quantities ──────────────────────────────────────────────────────

def test_mass_of_constant(grid):
    assert mass(constant(grid, 2.0 - 1.0j)) == pytest.approx(5.0 * grid.L)


@pytest.mark.parametrize("sigma", [1, -1])
def test_energy_of_plane_wave(grid, sigma):
    a, mode = 0.5, 3
    k = 2 * np.pi * mode / grid.L
    expected = 0.5 * k**2 * a**2 * grid.L + sigma * 0.25 * a**4 * grid.L
    assert energy(plane_wave(grid, a, mode), SolverConfig(sigma=sigma)) == pytest.approx(expected, rel=1e-12)


# ── Space-time norms ──────────────────────────────────────────────────────────

def test_l6_norm_of_constant(grid):
    traj = constant_trajectory(grid, 0.5)
    R, T = 4.0, 1.0
    assert spacetime_lp_norm(traj, 6.0, R=R) == pytest.approx(0.5 * (T * 2 * R) ** (1 / 6), rel=1e-12)


def test_mixed_norm_of_constant(grid):
    traj = constant_trajectory(grid, 0.5)
    assert spacetime_lp_norm(traj, (1.0, 2.0), R=4.0) == pytest.approx(1.0 * 0.5 * math.sqrt(8.0), rel=1e-12)


def test_window_restricts_time(grid):
    traj = constant_trajectory(grid, 1.0)
    full = spacetime_lp_norm(traj, (1.0, math.inf))
    half = spacetime_lp_norm(traj, (1.0, math.inf), window=(0.0, 0.5))
    assert full == pytest.approx(1.0)
    assert half == pytest.approx(0.5)


def test_empty_window_rejected(grid):
    with pytest.raises(ConfigurationError):
        spacetime_lp_norm(constant_trajectory(grid, 1.0), 2.0, window=(5.0, 6.0))


def test_strichartz_norm_of_constant(grid):
    traj = constant_trajectory(grid, 1.0)
    assert strichartz_norm(traj) == pytest.approx(math.sqrt(grid.L) + 1.0)


def test_free_strichartz_norm_dominates_mass(bump):
    traj = solve(bump, SolverConfig(coupling=0.0, dt=0.01, T=1.0))
    assert l2_norm(bump) <= strichartz_norm(traj) <= 3 * l2_norm(bump)


# ── Local smoothing ───────────────────────────────────────────────────────────

def test_local_smoothing_is_scale_invariant_for_linear_flow(grid):
    cfg   = SolverConfig(coupling=0.0, dt=0.01, T=0.5)
    small = random_band_limited(grid, 4.0, 0.1, 3)
    big   = small.scaled(20.0)
    r1 = local_smoothing_ratio(solve(small, cfg), 4.0)
    r2 = local_smoothing_ratio(solve(big, cfg), 4.0)
    assert r1 == pytest.approx(r2, rel=1e-10)


def test_local_smoothing_rejects_large_window(bump):
    traj = solve(bump, SolverConfig(dt=0.01, T=0.1))
    with pytest.raises(ConfigurationError):
        local_smoothing_ratio(traj, 20.0)


def test_tilde_s_norm_linear_is_sup_mass(bump):
    traj = solve(bump, SolverConfig(coupling=0.0, dt=0.01, T=0.5))
    assert tilde_s_norm(traj) == pytest.approx(l2_norm(bump), rel=1e-12)


# ── Equicontinuity ────────────────────────────────────────────────────────────

def symmetric_run(bump, dt=2**-9, T=0.25):
    cfg = SolverConfig(truncation="torus", N=2.0, dt=dt, T=T, symmetric=True)
    return solve(bump, cfg)


def test_zero_shift_has_zero_modulus(bump):
    traj = symmetric_run(bump)
    assert equicontinuity_modulus(traj, 0.0, 0.0, 4.0, 0.125) == 0.0


def test_modulus_grows_with_shift(bump):
    traj  = symmetric_run(bump)
    small = equicontinuity_modulus(traj, 2**-5, 0.0, 4.0, 0.125)
    large = equicontinuity_modulus(traj, 2**-3, 0.0, 4.0, 0.125)
    assert 0 < small < large


def test_shift_between_snapshots_uses_the_nearest_one(bump):
    traj   = symmetric_run(bump, dt=1e-3, T=0.07)
    exact  = equicontinuity_modulus(traj, 0.012, 0.0, 4.0, 0.05)
    offset = equicontinuity_modulus(traj, 0.0123, 0.0, 4.0, 0.05)
    assert exact > 0
    assert offset == pytest.approx(exact, rel=1e-12)
    assert equicontinuity_modulus(traj, -0.0123, 0.0, 4.0, 0.05) > 0


def test_sparse_snapshots_rejected(bump):
    traj = symmetric_run(bump, dt=2**-6)
    with pytest.raises(ConfigurationError):
        equicontinuity_modulus(traj, 2**-5, 0.0, 4.0, 0.125)


def test_coverage_required(bump):
    traj = symmetric_run(bump, T=0.125)
    with pytest.raises(ConfigurationError):
        equicontinuity_modulus(traj, 2**-3, 0.0, 4.0, 0.125)


# ── Operators and fits ────────────────────────────────────────────────────────

def test_operator_norm_identity():
    assert operator_norm(aslinearoperator(np.eye(6, dtype=complex))) == pytest.approx(1.0)


def test_operator_norm_matches_dense_oracle(rng):
    A = rng.standard_normal((20, 20)) + 1j * rng.standard_normal((20, 20))
    assert operator_norm(aslinearoperator(A)) == pytest.approx(svdvals(A)[0], rel=1e-6)


def test_operator_norm_non_convergence():
    with pytest.raises(NumericError) as info:
        operator_norm(aslinearoperator(np.diag([1.0, 3.0, 2.0]).astype(complex)), max_iter=1)
    assert info.value.last_iterate is not None


def test_operator_norm_of_roundoff_level_operator(rng):
    # FFT round trip minus identity: every Rayleigh quotient is pure roundoff
    def apply(x):
        return sfft.ifft(sfft.fft(x, norm="ortho"), norm="ortho") - x

    A = LinearOperator((256, 256), matvec=apply, rmatvec=apply, dtype=complex)
    value = operator_norm(A)
    assert 0.0 <= value <= 1e-13


def test_operator_norm_of_tiny_operator_is_scale_free():
    A = aslinearoperator(1e-9 * np.diag([1.0, 3.0, 2.0]).astype(complex))
    assert operator_norm(A) == pytest.approx(3e-9, rel=1e-6)


def test_linear_flow_is_symplectic(grid, bump, rng):
    cfg  = SolverConfig(dt=1e-2, T=0.5, coupling=0.0)
    a, b = (rng.standard_normal(grid.M) + 1j * rng.standard_normal(grid.M) for _ in range(2))
    defect = symplectic_defect(lambda v: flow_map(v, grid, cfg), bump.physical(), a, b, grid)
    assert defect <= 1e-8


def test_truncated_cubic_flow_is_symplectic(bump, rng):
    grid = bump.grid
    cfg  = SolverConfig(truncation="torus", N=2.0, dt=1e-2, T=0.5)
    a    = lp_project(ComplexField(grid, rng.standard_normal(grid.M) + 0j), 4.0).physical()
    b    = lp_project(ComplexField(grid, 1j * rng.standard_normal(grid.M)), 4.0).physical()
    defect = symplectic_defect(lambda v: flow_map(v, grid, cfg), bump.scaled(0.5).physical(), a, b, grid)
    assert defect <= 1e-6


def test_dilation_is_not_symplectic(grid, bump):
    a = bump.physical()
    defect = symplectic_defect(lambda v: 1.1 * v, bump.physical(), a, 1j * a, grid)
    assert defect == pytest.approx(0.21, rel=1e-9)


def test_symplectic_defect_needs_directions(grid, bump):
    with pytest.raises(ConfigurationError):
        symplectic_defect(lambda v: v, bump.physical(), np.zeros(grid.M), bump.physical(), grid)


def test_loglog_slope_of_power_law():
    x = np.array([1.0, 2.0, 4.0, 8.0])
    slope, r2 = loglog_slope(x, 3 * x**2)
    assert slope == pytest.approx(2.0)
    assert r2 == pytest.approx(1.0)


def test_loglog_slope_rejects_non_positive():
    with pytest.raises(ConfigurationError):
        loglog_slope([1.0, 2.0], [0.0, 1.0])


def test_norm_report_lists_every_norm(grid):
    traj   = solve(gaussian(grid, 0.5), SolverConfig(truncation="torus", N=2.0, dt=0.01, T=0.2))
    report = norm_report(traj, 4.0)
    assert set(report.values) == {"mass", "energy", "s_norm", "l6_norm", "local_smoothing_ratio", "tilde_s_norm"}
    assert all(np.isfinite(v) for v in report.values.values())
