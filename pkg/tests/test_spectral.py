import numpy as np
import pytest

from analysis.data import plane_wave
from analysis.errors import ConfigurationError, NumericError
from analysis.spectral import (
    SPECTRAL,
    TO_PHYSICAL,
    TO_SPECTRAL,
    ComplexField,
    extend_periodic,
    fold_to_torus,
    free_evolve,
    low_pass_symbol,
    lp_project,
    make_grid,
    pairing,
    smooth_step,
    symplectic_form,
    transform,
)


def random_field(grid, rng):
    return ComplexField(grid, rng.standard_normal(grid.M) + 1j * rng.standard_normal(grid.M))


def l2(values):
    return float(np.linalg.norm(values))


# ── Grid ──────────────────────────────────────────────────────────────────────

def test_unit_grid_lattice_is_integers(unit_grid):
    assert unit_grid.dx == pytest.approx(np.pi / 4)
    np.testing.assert_allclose(unit_grid.lattice, np.arange(-4, 4), atol=1e-12)
    np.testing.assert_allclose(unit_grid.x[0], -np.pi)


@pytest.mark.parametrize("L, M", [(32.0, 100), (32.0, 4), (0.0, 64), (-1.0, 64), (np.inf, 64)])
def test_invalid_grids_rejected(L, M):
    with pytest.raises(ConfigurationError):
        make_grid(L, M)


# ── Fields and transforms ─────────────────────────────────────────────────────

def test_round_trip_and_parseval(grid, rng):
    f    = random_field(grid, rng)
    back = transform(transform(f, TO_SPECTRAL), TO_PHYSICAL)
    np.testing.assert_allclose(back.values, f.values, atol=1e-12)
    mass_x = grid.dx * np.sum(np.abs(f.physical()) ** 2)
    mass_k = grid.dx * np.sum(np.abs(f.spectral()) ** 2)
    assert mass_k == pytest.approx(mass_x, rel=1e-12)


def test_constant_field_has_only_zero_mode(unit_grid):
    f   = ComplexField(unit_grid, np.ones(8))
    hat = transform(f, TO_SPECTRAL).values
    assert hat[0] == pytest.approx(np.sqrt(8))
    np.testing.assert_allclose(hat[1:], 0, atol=1e-12)


def test_representation_mismatch(grid, rng):
    hat = transform(random_field(grid, rng), TO_SPECTRAL)
    with pytest.raises(ConfigurationError):
        transform(hat, TO_SPECTRAL)


def test_non_finite_values_rejected(grid):
    values = np.zeros(grid.M, dtype=complex)
    values[3] = np.nan
    with pytest.raises(NumericError):
        transform(ComplexField(grid, values), TO_SPECTRAL)


def test_fields_are_immutable(grid, rng):
    f = random_field(grid, rng)
    with pytest.raises(ValueError):
        f.values[0] = 1.0


# ── Symbols ───────────────────────────────────────────────────────────────────

def test_smooth_step_values():
    assert smooth_step(-1.0) == 0.0
    assert smooth_step(2.0) == 1.0
    assert smooth_step(0.5) == pytest.approx(0.5)
    s = np.linspace(-0.5, 1.5, 401)
    np.testing.assert_allclose(smooth_step(s) + smooth_step(1 - s), 1.0, atol=1e-15)
    assert np.all(np.diff(smooth_step(s)) >= 0)


def test_smooth_step_slope_at_midpoint():
    h = 1e-6
    slope = (smooth_step(0.5 + h) - smooth_step(0.5 - h)) / (2 * h)
    assert slope == pytest.approx(2.0, rel=1e-6)


def test_low_pass_symbol_profile():
    m = low_pass_symbol(2.0)
    assert m(0.0) == 1.0
    assert m(2.0) == 1.0
    assert m(3.0) == pytest.approx(0.5)
    assert m(4.0) == 0.0
    assert m(-9.0) == 0.0


def test_lp_project_keeps_low_and_kills_high_modes():
    grid = make_grid(2 * np.pi, 64)
    low  = plane_wave(grid, 1.0, 1)
    high = plane_wave(grid, 1.0, 5)
    np.testing.assert_allclose(lp_project(low, 2.0).to_physical().values, low.values, atol=1e-12)
    np.testing.assert_allclose(lp_project(high, 2.0).to_physical().values, 0.0, atol=1e-12)
    assert lp_project(low, 2.0).representation == SPECTRAL


@pytest.mark.parametrize("N", [0.0, -1.0, np.inf])
def test_lp_project_rejects_bad_cutoff(grid, bump, N):
    with pytest.raises(ConfigurationError):
        lp_project(bump, N)


def test_free_evolve_rotates_plane_wave():
    grid = make_grid(2 * np.pi, 64)
    wave = plane_wave(grid, 1.0, 3)
    out  = free_evolve(wave, 0.25).to_physical()
    np.testing.assert_allclose(out.values, wave.values * np.exp(-1j * 9 * 0.25), atol=1e-12)


def test_band_pieces_telescope(grid, rng):
    f      = random_field(grid, rng)
    pieces = [lp_project(f, 0.5 * 2**j, "band").spectral() for j in range(1, 5)]
    total  = lp_project(f, 0.5, "low").spectral() + sum(pieces)
    np.testing.assert_allclose(total, lp_project(f, 0.5 * 2**4, "low").spectral(), atol=1e-12)


def test_low_and_high_pass_split_the_field(grid, rng):
    f = random_field(grid, rng)
    np.testing.assert_allclose(
        lp_project(f, 2.0, "low").spectral() + lp_project(f, 2.0, "high").spectral(), f.spectral(), atol=1e-12
    )


def test_low_pass_idempotent_where_symbol_is_zero_or_one(grid, rng):
    f     = random_field(grid, rng)
    once  = lp_project(f, 2.0)
    twice = lp_project(once, 2.0)
    m     = low_pass_symbol(2.0).on(grid)
    flat  = (m == 0.0) | (m == 1.0)
    assert flat.any() and not flat.all()
    assert np.array_equal(twice.spectral()[flat], once.spectral()[flat])
    assert l2(twice.spectral() - once.spectral()) <= 0.25 * l2(f.spectral())


def test_free_evolution_is_a_group(grid, rng):
    f = random_field(grid, rng)
    np.testing.assert_allclose(
        free_evolve(free_evolve(f, 0.3), 0.45).spectral(), free_evolve(f, 0.75).spectral(), atol=1e-12
    )
    np.testing.assert_allclose(free_evolve(free_evolve(f, 0.3), -0.3).physical(), f.physical(), atol=1e-12)
    assert l2(free_evolve(f, 2.0).spectral()) == pytest.approx(l2(f.spectral()), rel=1e-13)


# ── Pairing ───────────────────────────────────────────────────────────────────

def test_pairing_is_conjugate_linear_in_first_slot(grid, rng):
    l, u = random_field(grid, rng), random_field(grid, rng)
    c    = 2.0 - 3.0j
    assert pairing(l.scaled(c), u) == pytest.approx(np.conj(c) * pairing(l, u))
    assert pairing(u, u).real == pytest.approx(grid.dx * np.sum(np.abs(u.values) ** 2))


def test_symplectic_form_is_antisymmetric(grid, rng):
    u, v = random_field(grid, rng), random_field(grid, rng)
    assert symplectic_form(u, v) == pytest.approx(-symplectic_form(v, u))
    assert symplectic_form(u, u) == pytest.approx(0.0, abs=1e-12)


def test_pairing_grid_mismatch(grid, unit_grid):
    with pytest.raises(ConfigurationError):
        pairing(ComplexField(grid, np.ones(grid.M)), ComplexField(unit_grid, np.ones(8)))


# ── Torus and line ────────────────────────────────────────────────────────────

def test_extend_and_fold_are_adjoint(rng):
    torus = make_grid(8.0, 16)
    line  = make_grid(32.0, 64)
    f, g  = random_field(torus, rng), random_field(line, rng)
    assert pairing(extend_periodic(f, line), g) == pytest.approx(pairing(f, fold_to_torus(g, torus)))
    np.testing.assert_allclose(fold_to_torus(extend_periodic(f, line), torus).values, 4 * f.values)


def test_window_supported_function_folds_to_itself(rng):
    torus  = make_grid(8.0, 16)
    line   = make_grid(32.0, 64)
    values = np.zeros(line.M, dtype=complex)
    inside = (line.x >= -4.0) & (line.x < 4.0)
    values[inside] = rng.standard_normal(inside.sum())
    folded = fold_to_torus(ComplexField(line, values), torus)
    np.testing.assert_allclose(folded.values, values[inside])
    np.testing.assert_allclose(torus.x, line.x[inside])


def test_surrogate_must_be_integer_multiple():
    with pytest.raises(ConfigurationError):
        extend_periodic(ComplexField(make_grid(8.0, 16), np.ones(16)), make_grid(30.0, 64))
