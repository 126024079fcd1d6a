import numpy as np
import pytest

from analysis.data import gaussian, plane_wave, plane_wave_solution, soliton, soliton_solution, zero
from analysis.diagnostics import energy, l2_norm, loglog_slope
from analysis.dynamics import (
    EXACT_PHASE,
    RK4,
    SolverConfig,
    Trajectory,
    convergence_order,
    duhamel_residual,
    flow_map,
    nonlinear_term,
    solve,
    step,
)
from analysis.errors import ConfigurationError, NumericError
from analysis.spectral import ComplexField, make_grid


# ── Config ────────────────────────────────────────────────────────────────────

def test_integrator_follows_truncation():
    assert SolverConfig().integrator == EXACT_PHASE
    assert SolverConfig(truncation="line", N=2.0).integrator == RK4


@pytest.mark.parametrize("kwargs", [
    {"sigma": 0},
    {"truncation": "box"},
    {"truncation": "torus"},
    {"dt": 2.0, "T": 1.0},
    {"dt": 1e-3, "T": 1.0, "stride": 3},
    {"dt": -1e-3},
    {"truncation": "line", "N": 2.0, "integrator": EXACT_PHASE},
    {"truncation": "none", "integrator": RK4},
    {"integrator": "euler"},
])
def test_invalid_solver_configs(kwargs):
    with pytest.raises(ConfigurationError):
        SolverConfig(**kwargs)


# ── Closed forms ──────────────────────────────────────────────────────────────

def energy_drift(traj):
    energies = np.array([energy(traj.field(i), traj.config) for i in range(len(traj))])
    return float(np.max(np.abs(energies - energies[0])) / abs(energies[0]))


@pytest.mark.parametrize("sigma", [1, -1])
def test_plane_wave_is_exact(grid, sigma):
    cfg  = SolverConfig(sigma=sigma, dt=1e-3, T=1.0, stride=100)
    traj = solve(plane_wave(grid, 0.5, 3), cfg)
    exact = plane_wave_solution(grid, 0.5, 3, sigma, 1.0)
    assert l2_norm(traj.final - exact) <= 1e-10
    assert traj.times[-1] == pytest.approx(1.0)
    assert energy_drift(traj) <= 1e-6


def test_focusing_soliton_keeps_its_profile():
    grid = make_grid(64.0, 1024)
    cfg  = SolverConfig(sigma=-1, dt=1e-3, T=1.0, stride=100)
    traj = solve(soliton(grid), cfg)
    assert l2_norm(traj.final - soliton_solution(grid, 1.0, 0.0, 1.0)) <= 1e-5
    assert traj.mass_drift <= 1e-12
    assert energy_drift(traj) <= 1e-6


def test_zero_data_stays_zero(grid):
    traj = solve(zero(grid), SolverConfig(truncation="torus", N=2.0, dt=0.01, T=0.1))
    assert np.all(traj.samples == 0)
    assert traj.mass_drift == 0.0


# ── Conservation and symmetry ─────────────────────────────────────────────────

def test_untruncated_mass_conservation(bump):
    traj = solve(bump, SolverConfig(dt=1e-3, T=1.0, stride=50))
    assert traj.mass_drift <= 1e-12


def test_truncated_mass_conservation(bump):
    traj = solve(bump, SolverConfig(truncation="line", N=4.0, dt=1e-3, T=1.0, stride=50))
    assert traj.mass_drift <= 1e-8


def test_backward_solve_reverses_forward(bump):
    cfg  = SolverConfig(dt=1e-3, T=0.5, stride=50)
    fwd  = solve(bump, cfg)
    back = solve(fwd.final, cfg, backward=True)
    assert l2_norm(back.initial - bump) <= 1e-10
    assert back.times[0] == pytest.approx(-0.5)
    assert back.times[-1] == pytest.approx(0.0)


def test_symmetric_solve_covers_both_directions(bump):
    cfg  = SolverConfig(truncation="torus", N=2.0, dt=0.01, T=0.2, stride=5, symmetric=True)
    traj = solve(bump, cfg)
    assert len(traj) == 9
    np.testing.assert_allclose(traj.times, np.linspace(-0.2, 0.2, 9), atol=1e-12)
    np.testing.assert_allclose(traj.samples[4], bump.values, atol=1e-15)


def test_solve_is_deterministic(bump):
    cfg = SolverConfig(truncation="line", N=2.0, dt=0.01, T=0.1)
    assert np.array_equal(solve(bump, cfg).samples, solve(bump, cfg).samples)


# ── Steps and batches ─────────────────────────────────────────────────────────

def test_step_matches_single_step_solve(bump):
    cfg = SolverConfig(truncation="torus", N=2.0, dt=0.01, T=0.01)
    np.testing.assert_allclose(step(bump, cfg).values, solve(bump, cfg).final.values, atol=1e-14)


def test_flow_map_batches_agree_with_solve(grid, bump):
    cfg   = SolverConfig(truncation="torus", N=2.0, dt=0.01, T=0.1)
    other = gaussian(grid, 0.5, 2.0, 1.5)
    batch = flow_map(np.stack([bump.values, other.values]), grid, cfg)
    np.testing.assert_allclose(batch[0], solve(bump, cfg).final.values, atol=1e-12)
    np.testing.assert_allclose(batch[1], solve(other, cfg).final.values, atol=1e-12)


def test_nonlinear_term_vanishes_outside_truncation():
    grid = make_grid(2 * np.pi, 64)
    cfg  = SolverConfig(truncation="torus", N=2.0, dt=0.01, T=0.1)
    out  = nonlinear_term(plane_wave(grid, 1.0, 5), cfg).to_physical()
    np.testing.assert_allclose(out.values, 0.0, atol=1e-12)


def test_nonlinear_term_untruncated_is_cubic(bump):
    cfg = SolverConfig(sigma=-1)
    out = nonlinear_term(bump, cfg).to_physical()
    np.testing.assert_allclose(out.values, -np.abs(bump.values) ** 2 * bump.values, atol=1e-12)


# ── Errors ────────────────────────────────────────────────────────────────────

def test_norm_cap_enforced(grid):
    with pytest.raises(ConfigurationError):
        solve(gaussian(grid, 10.0), SolverConfig(dt=0.01, T=0.1))


def test_overflow_reports_step(grid):
    cfg  = SolverConfig(truncation="line", N=1.0, dt=0.01, T=0.1, norm_cap=1e300)
    huge = ComplexField(grid, np.full(grid.M, 1e150))
    with pytest.raises(NumericError) as info:
        solve(huge, cfg)
    assert info.value.step == 1


# ── Duhamel and order ─────────────────────────────────────────────────────────

def test_duhamel_residual_of_plane_wave(grid):
    traj = solve(plane_wave(grid, 0.5, 3), SolverConfig(dt=1e-3, T=1.0, stride=10))
    assert duhamel_residual(traj) <= 1e-6


@pytest.mark.parametrize("truncation, N", [("none", None), ("torus", 2.0), ("line", 2.0)])
def test_duhamel_residual_of_linear_flow(bump, truncation, N):
    cfg  = SolverConfig(truncation=truncation, N=N, dt=1e-2, T=1.0, stride=10, coupling=0.0)
    assert duhamel_residual(solve(bump, cfg)) <= 1e-12


def test_duhamel_needs_three_snapshots(bump):
    traj = solve(bump, SolverConfig(dt=0.1, T=0.1))
    assert len(traj) == 2
    with pytest.raises(ConfigurationError):
        duhamel_residual(traj)


def test_trajectory_requires_increasing_times(grid):
    with pytest.raises(ConfigurationError):
        Trajectory(grid, np.zeros((3, grid.M)), 0.0, 0.0)


def test_strang_is_second_order(bump):
    cfg = SolverConfig(truncation="torus", N=4.0, dt=0.02, T=0.5)
    dts, errors = convergence_order(bump, cfg, [0.05, 0.025, 0.0125], 0.000625)
    slope, r2 = loglog_slope(dts, errors)
    assert 1.7 <= slope <= 2.3
    assert r2 >= 0.99
