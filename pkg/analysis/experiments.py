"""
Refinement-schedule experiments.

Each run walks a schedule of (N_n, L_n, eta_n) triples, performs the torus
and line-surrogate solves for every entry, and collects the per-entry values
as rows of a DataFrame whose columns become the named series of an
ExperimentReport. Entries are independent and run on a thread pool.
Verdicts are attached as rules over those series (see analysis/reports.py).
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
import pandas as pd
from scipy import fft as sfft

from analysis.cutoffs import (
    LEVELS,
    build_cutoff,
    pigeonhole_interval,
    required_count,
    subinterval_count,
)
from analysis.data import gaussian, random_band_limited
from analysis.diagnostics import (
    equicontinuity_modulus,
    l2_norm,
    loglog_slope,
    spacetime_lp_norm,
    strichartz_norm,
)
from analysis.dynamics import SolverConfig, Trajectory, solve
from analysis.errors import ConfigurationError
from analysis.reports import ExperimentReport
from analysis.spectral import (
    ComplexField,
    extend_periodic,
    extend_values,
    fold_values,
    low_pass_symbol,
    make_grid,
    spectral_derivative,
)

logger = logging.getLogger(__name__)


# ── Schedule ──────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class ScheduleEntry:
    n:     int
    N:     float
    L:     float
    eta:   float
    kappa: int = 8

    @property
    def label(self):
        return f"n={self.n} (N={self.N:g}, L={self.L:g}, eta={self.eta:g})"


def make_schedule(Ns, Ls, etas, kappa=8):
    if not (len(Ns) == len(Ls) == len(etas)):
        raise ConfigurationError("schedule arrays N, L and eta must have equal length")
    return [ScheduleEntry(i + 1, float(N), float(L), float(e), int(kappa))
            for i, (N, L, e) in enumerate(zip(Ns, Ls, etas))]


def validate_schedule(entries, M_bound, T):
    """
    N strictly increasing, eta strictly decreasing, kappa >= 4 and every torus
    long enough for the pigeonhole scan.
    """
    if not entries:
        raise ConfigurationError("schedule is empty")
    for prev, cur in zip(entries, entries[1:]):
        if not cur.N > prev.N:
            raise ConfigurationError(f"schedule N must be strictly increasing ({prev.N} -> {cur.N})")
        if not cur.eta < prev.eta:
            raise ConfigurationError(f"schedule eta must be strictly decreasing ({prev.eta} -> {cur.eta})")
    for e in entries:
        if e.kappa < 4 or int(e.kappa) != e.kappa:
            raise ConfigurationError(f"surrogate ratio kappa must be an integer >= 4, got {e.kappa}")
        if not (e.N > 0 and e.L > 0 and 0 < e.eta):
            raise ConfigurationError(f"schedule entry {e.label} has non-positive parameters")
        K = subinterval_count(e.L, e.eta, e.N, T)
        if K < required_count(M_bound, e.eta):
            raise ConfigurationError(
                f"schedule entry {e.label}: only {K} pigeonhole subintervals, "
                f"need {required_count(M_bound, e.eta):g}"
            )
    return entries


def resolve_points(L, N, width=None, factor=4.0, cap=None):
    """Smallest power of two M >= 8 with pi/dx > factor*N and dx <= width/4."""
    M = 8
    while not (L / M < math.pi / (factor * N) and (width is None or L / M <= width / 4)):
        M *= 2
        if cap is not None and M > cap:
            raise ConfigurationError(f"grid for L={L:g}, N={N:g} needs more than {cap} points")
    return M


# ── Shared per-entry machinery ────────────────────────────────────────────────

@dataclass
class _SurrogateRun:
    entry:     ScheduleEntry
    torus:     object
    line:      object
    u0:        ComplexField
    selection: object
    chi:       dict
    surrogate: Trajectory
    config:    SolverConfig


def _phase_space_data(torus, entry, M_bound, seed):
    return random_band_limited(torus, 2 * entry.N, M_bound, [seed, entry.n])


def _surrogate_run(entry, M_bound, T, seed, dt, stride, sigma, coupling, data_factory):
    width = entry.N * T / entry.eta
    torus = make_grid(entry.L, resolve_points(entry.L, entry.N, width))
    if data_factory is None:
        u0 = _phase_space_data(torus, entry, M_bound, seed)
    else:
        u0 = data_factory(torus, entry)
    selection = pigeonhole_interval(u0, entry.eta, entry.N, T, M_bound)
    line      = make_grid(entry.kappa * entry.L, entry.kappa * torus.M)
    chi       = {j: build_cutoff(selection, j, line) for j in LEVELS}
    cfg = SolverConfig(
        sigma=sigma, truncation="line", N=entry.N, dt=dt, T=T, stride=stride,
        coupling=coupling, symmetric=True, norm_cap=max(4.0, M_bound),
    )
    logger.info("%s: torus M=%d, surrogate M=%d, w=%g", entry.label, torus.M, line.M, width)
    surrogate = solve(chi[0].apply(extend_periodic(u0, line)), cfg)
    return _SurrogateRun(entry, torus, line, u0, selection, chi, surrogate, cfg)


def map_entries(fn, entries, workers=1):
    """fn over schedule entries on a thread pool of `workers`; results in schedule order."""
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return list(pool.map(fn, entries))


def _leakage(run, j):
    """sup_t ||(1 - chi^j) u~(t)||_2 over the surrogate trajectory."""
    outside = (1.0 - run.chi[j].values) * run.surrogate.samples
    return float(np.max(np.sqrt(run.line.dx * np.sum(np.abs(outside) ** 2, axis=-1))))


def _project(values, grid, N):
    mask = low_pass_symbol(N).on(grid)
    return sfft.ifft(mask * sfft.fft(values, axis=-1, norm="ortho"), axis=-1, norm="ortho")


def _cubic(values, cfg):
    return cfg.sigma * cfg.coupling * np.abs(values) ** 2 * values


def _defaults(T, dt, stride):
    return (T / 10 if dt is None else dt), (1 if stride is None else stride)


# ── Approximation ─────────────────────────────────────────────────────────────

def _approximation_row(entry, M_bound, T, seed, dt, stride, j, sigma, coupling, data_factory):
    run   = _surrogate_run(entry, M_bound, T, seed, dt, stride, sigma, coupling, data_factory)
    torus = run.torus
    u     = solve(run.u0, replace(run.config, truncation="torus"))

    lifted = run.chi[2].values * run.surrogate.samples
    folded = fold_values(lifted, torus, run.line)
    z      = _project(folded, torus, 2 * entry.N)
    error  = Trajectory(torus, z - u.samples, u.t0, u.spacing)

    # z_n(0) must live on the phase-space modes
    origin  = int(np.argmin(np.abs(u.times)))
    z0_hat  = sfft.fft(z[origin], norm="ortho")
    outside = low_pass_symbol(2 * entry.N).on(torus) == 0
    scale   = max(1.0, float(np.max(np.abs(z0_hat))))
    out_of_band = float(np.max(np.abs(z0_hat[outside]), initial=0.0)) / scale

    cfg  = run.config
    line = run.line
    ut   = run.surrogate.samples

    # cutoff-derivative term P_{<=2N}[2 dchi2 du~ + d2chi2 u~]
    d1   = spectral_derivative(run.chi[2].values, line, 1).real
    d2   = spectral_derivative(run.chi[2].values, line, 2).real
    term = 2 * d1 * spectral_derivative(ut, line, 1) + d2 * ut
    term = _project(fold_values(term, torus, line), torus, 2 * entry.N)
    cutoff_term = spacetime_lp_norm(Trajectory(torus, term, u.t0, u.spacing), (1.0, 2.0))

    # projector-difference term chi^3 [F(P(chi2 u~)) - F(P^L(chi2 u~))]
    on_line  = _cubic(_project(lifted, line, entry.N), cfg)
    on_torus = _cubic(_project(folded, torus, entry.N), cfg)
    diff     = run.chi[3].values * (on_line - extend_values(on_torus, torus, line))
    projector_term = spacetime_lp_norm(Trajectory(line, diff, u.t0, u.spacing), 6.0 / 5.0)

    # commutator term [chi^2, P^L] F(P^L(chi2 u~))
    chi2_t = build_cutoff(run.selection, 2, torus).values
    comm   = chi2_t * _project(on_torus, torus, entry.N) - _project(chi2_t * on_torus, torus, entry.N)
    commutator_term = spacetime_lp_norm(Trajectory(torus, comm, u.t0, u.spacing), (1.0, 2.0))

    s_error = strichartz_norm(error)
    logger.info("%s: S-norm error %.4e", entry.label, s_error)
    return {
        "N":                      entry.N,
        "L":                      entry.L,
        "eta":                    entry.eta,
        "pigeonhole_count":       run.selection.count,
        "boundary_mass":          run.selection.boundary_mass,
        "s_error":                s_error,
        "cutoff_derivative_term": cutoff_term,
        "projector_difference":   projector_term,
        "commutator_term":        commutator_term,
        "mass_localization":      _leakage(run, j),
        "z0_out_of_band":         out_of_band,
    }


def run_approximation(schedule, M_bound, T, seed, *, dt=None, stride=None, j=1,
                      sigma=1, coupling=1.0, data_factory=None, workers=1):
    """
    Compares the truncated torus flow u_n with the localized line-surrogate
    flow z_n = P_{<=2N}(fold(chi^2 u~_n)) in the Strichartz norm, and records
    the residual terms that drive their difference.
    """
    validate_schedule(schedule, M_bound, T)
    dt, stride = _defaults(T, dt, stride)
    rows = map_entries(
        lambda entry: _approximation_row(entry, M_bound, T, seed, dt, stride, j, sigma, coupling, data_factory),
        schedule, workers,
    )
    report = ExperimentReport(name="approx").add_table(pd.DataFrame(rows))

    report.add_series("s_error_final", [report.series["s_error"][-1]])
    report.add_verdict("s_error_decreasing", "decreasing:s_error")
    report.add_verdict("s_error_small", f"at_most:s_error_final:{0.1 * M_bound!r}")
    report.add_verdict("mass_localization_decreasing", "decreasing:mass_localization")
    report.add_verdict("z0_band_limited", "at_most:z0_out_of_band:1e-12")
    report.flag("cutoff_level", j)
    return report


# ── Mass localization ─────────────────────────────────────────────────────────

def _mass_localization_row(entry, M_bound, T, j, seed, dt, stride, sigma, coupling, data_factory):
    run     = _surrogate_run(entry, M_bound, T, seed, dt, stride, sigma, coupling, data_factory)
    leakage = _leakage(run, j)
    at_zero = run.surrogate.samples[len(run.surrogate) // 2]
    outside = (1.0 - run.chi[j].values) * at_zero
    initial = float(np.sqrt(run.line.dx * np.sum(np.abs(outside) ** 2)))
    logger.info("%s: leakage %.4e (initial %.4e)", entry.label, leakage, initial)
    return {"N": entry.N, "eta": entry.eta, "mass_localization": leakage, "initial_leakage": initial}


def run_mass_localization(schedule, M_bound, T, j, seed, *, dt=None, stride=None,
                          sigma=1, coupling=1.0, data_factory=None, workers=1):
    """sup_t ||(1 - chi^j) u~_n(t)||_2 per schedule entry."""
    if j not in LEVELS:
        raise ConfigurationError(f"cutoff level must be in 0..4, got {j}")
    validate_schedule(schedule, M_bound, T)
    dt, stride = _defaults(T, dt, stride)
    rows = map_entries(
        lambda entry: _mass_localization_row(entry, M_bound, T, j, seed, dt, stride, sigma, coupling, data_factory),
        schedule, workers,
    )
    report = ExperimentReport(name="mass-loc").add_table(pd.DataFrame(rows))
    report.add_verdict("mass_localization_decreasing", "decreasing:mass_localization")
    report.flag("cutoff_level", j)
    return report


# ── Weak well-posedness ───────────────────────────────────────────────────────

ESCAPES = ("modulation", "translation", "none")


def _check_probe(probe, grid):
    edge = np.abs(grid.x) >= 0.45 * grid.L
    peak = float(np.max(np.abs(probe.physical())))
    if peak > 0 and float(np.max(np.abs(probe.physical()[edge]))) > 1e-12 * peak:
        raise ConfigurationError("probe support reaches the edge of the grid")


def _escape_field(h, escape, n, rate, shift):
    grid = h.grid
    if escape == "modulation":
        k = 2 * np.pi * rate * n / grid.L
        return h.multiplied(np.exp(1j * k * grid.x)), k
    if escape == "translation":
        offset = n * shift
        shifted = sfft.ifft(np.exp(-1j * grid.xi * offset) * h.spectral(), norm="ortho")
        return ComplexField(grid, shifted), offset
    return ComplexField(grid, np.zeros(grid.M, dtype=complex)), 0.0


def _pairings(probes, traj):
    psi = np.stack([p.physical() for p in probes])
    return traj.grid.dx * np.conj(psi) @ traj.samples.T


def run_weak_wp(probes, f, escape, schedule, T, *, h=None, rate=8, shift=None,
                dt=1e-3, stride=50, sigma=1, coupling=1.0, workers=1):
    """
    Truncated flows of f + g_n against the untruncated flow of f, tested
    against fixed probes. g_n escapes weakly (modulation to ever higher
    frequency or translation to ever larger offset). A control run with
    g = 0 and a cutoff above the grid's Nyquist frequency is always included.
    """
    if escape not in ESCAPES:
        raise ConfigurationError(f"escape must be one of {ESCAPES}, got '{escape}'")
    if not probes:
        raise ConfigurationError("at least one probe is needed")
    grid = f.grid
    for p in probes:
        _check_probe(p, grid)
    h     = gaussian(grid, 0.5) if h is None else h
    shift = grid.L / 8 if shift is None else shift
    cap   = max(4.0, 1.01 * (l2_norm(f) + l2_norm(h)))

    base     = SolverConfig(sigma=sigma, truncation="none", dt=dt, T=T, stride=stride, coupling=coupling, norm_cap=cap)
    baseline = _pairings(probes, solve(f, base))

    def row(entry):
        g, parameter = _escape_field(h, escape, entry.n, rate, shift)
        traj = solve(f + g, replace(base, truncation="torus", N=entry.N, integrator=None))
        disc = float(np.max(np.abs(_pairings(probes, traj) - baseline)))
        logger.info("weak-wp n=%d N=%g escape=%s (%g): discrepancy %.4e", entry.n, entry.N, escape, parameter, disc)
        return {"N": entry.N, "escape": parameter, "discrepancy": disc}

    report = ExperimentReport(name="weak-wp")
    if schedule:
        report.add_table(pd.DataFrame(map_entries(row, schedule, workers)))

    control = solve(f, replace(base, truncation="torus", N=grid.nyquist, integrator=None))
    report.add_series("control_discrepancy", [float(np.max(np.abs(_pairings(probes, control) - baseline)))])
    if escape != "none":
        report.add_verdict("discrepancy_decreasing", "decreasing:discrepancy")
    report.add_verdict("control_matches", "at_most:control_discrepancy:1e-06")
    report.flag("escape", escape)
    return report


# ── Perturbation ──────────────────────────────────────────────────────────────

FORCING_SHAPES = ("none", "gaussian")


def run_perturbation(u0, eps_list, direction, forcing_shape, N, T, *, dt=1e-3, stride=10,
                     sigma=1, coupling=1.0, eps0=0.5):
    """
    Stability of the truncated line flow: data u0 + eps*d and forcing eps*e
    with ||e||_{L^1 L^2} = eps. Records ||u~ - u||_S / eps per eps.
    """
    if forcing_shape not in FORCING_SHAPES:
        raise ConfigurationError(f"forcing shape must be one of {FORCING_SHAPES}")
    grid = u0.grid
    d    = direction.scaled(1.0 / l2_norm(direction))
    cap  = max(4.0, 1.01 * (l2_norm(u0) + max(eps_list, default=0.0)))
    cfg  = SolverConfig(sigma=sigma, truncation="line", N=N, dt=dt, T=T, stride=stride, coupling=coupling, norm_cap=cap)
    base = solve(u0, cfg)

    shape = None
    if forcing_shape == "gaussian":
        bump  = gaussian(grid, 1.0, 0.0, 1.0)
        shape = bump.scaled(1.0 / (T * l2_norm(bump)))

    report = ExperimentReport(name="perturb")
    exact  = None
    beyond = False
    for eps in eps_list:
        if eps < 0:
            raise ConfigurationError(f"eps must be non-negative, got {eps}")
        forcing = None if shape is None else shape.scaled(eps)
        pert    = solve(u0 + d.scaled(eps), cfg, forcing=forcing)
        if eps == 0:
            exact = bool(np.array_equal(pert.samples, base.samples))
            continue
        diff  = Trajectory(grid, pert.samples - base.samples, base.t0, base.spacing)
        ratio = strichartz_norm(diff) / eps
        logger.info("perturb eps=%g: S-norm ratio %.4e", eps, ratio)
        report.append("eps",   eps)
        report.append("ratio", ratio)
        if eps < eps0:
            report.append("ratio_small_eps", ratio)
        else:
            beyond = True

    if "ratio_small_eps" in report.series:
        report.add_verdict("linear_response", "within_factor:ratio_small_eps:3")
    if exact is not None:
        report.flag("exact_match", exact)
    report.flag("beyond_eps0", beyond)
    return report


# ── Equicontinuity ────────────────────────────────────────────────────────────

def run_equicontinuity(grid, N, M_bound, T, taus, ys, R, seeds, *, dt, sigma=1, coupling=1.0):
    """
    Sup over a seeded ensemble of the time- and space-shift moduli, with
    their log-log slopes against the shift size.
    """
    reach = T + max(abs(t) for t in taus)
    cfg   = SolverConfig(
        sigma=sigma, truncation="torus", N=N, dt=dt, T=reach, stride=1,
        coupling=coupling, symmetric=True, norm_cap=max(4.0, M_bound),
    )
    tau_mod = np.zeros(len(taus))
    y_mod   = np.zeros(len(ys))
    for seed in seeds:
        traj = solve(random_band_limited(grid, 2 * N, M_bound, seed), cfg)
        tau_mod = np.maximum(tau_mod, [equicontinuity_modulus(traj, t, 0.0, R, T) for t in taus])
        y_mod   = np.maximum(y_mod,   [equicontinuity_modulus(traj, 0.0, y, R, T) for y in ys])

    report = ExperimentReport(name="equicontinuity")
    report.add_series("tau", taus)
    report.add_series("tau_modulus", tau_mod)
    report.add_series("y", ys)
    report.add_series("y_modulus", y_mod)
    tau_slope, tau_r2 = loglog_slope(taus, tau_mod)
    y_slope, y_r2     = loglog_slope(ys, y_mod)
    report.add_series("tau_slope", [tau_slope])
    report.add_series("tau_r2",    [tau_r2])
    report.add_series("y_slope",   [y_slope])
    report.add_series("y_r2",      [y_r2])
    report.add_verdict("tau_slope_positive", "at_least:tau_slope:0.2")
    report.add_verdict("y_slope_positive",   "at_least:y_slope:0.33")
    report.add_verdict("tau_fit_quality",    "at_least:tau_r2:0.9")
    report.add_verdict("y_fit_quality",      "at_least:y_r2:0.9")
    report.flag("ensemble_size", len(seeds))
    return report
