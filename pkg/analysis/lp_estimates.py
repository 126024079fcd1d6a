"""
Operator norms of the localization error operators, per schedule entry:

  - p2p     f -> chi (P_{<=N} - ext P^L_{<=N} fold)(chi f)   on the line
  - commutator [chi^j, P_{<=N}]                              line and torus
  - mismatch   chi^j P_{<=N} (1 - chi^i), j < i              line and torus

Each operator is a scipy LinearOperator with its adjoint; norms come from
power iteration on A*A (analysis.diagnostics.operator_norm). Grids resolve
max|xi| > 4N on both the torus and the surrogate.
"""

import logging

import numpy as np
import pandas as pd
from scipy import fft as sfft
from scipy.linalg import svdvals
from scipy.sparse.linalg import LinearOperator

from analysis.cutoffs import build_cutoff, cutoff_derivatives, pigeonhole_interval
from analysis.data import random_band_limited
from analysis.diagnostics import operator_norm
from analysis.errors import ConfigurationError
from analysis.experiments import map_entries, resolve_points, validate_schedule
from analysis.reports import ExperimentReport
from analysis.spectral import extend_values, fold_values, low_pass_symbol, make_grid

logger = logging.getLogger(__name__)


# ── Operators ─────────────────────────────────────────────────────────────────

def projector(grid, N):
    """P_{<=N} on grid samples; real symbol, so self-adjoint."""
    mask = low_pass_symbol(N).on(grid)

    def apply(v):
        return sfft.ifft(mask * sfft.fft(v, norm="ortho"), norm="ortho")

    return LinearOperator((grid.M, grid.M), matvec=apply, rmatvec=apply, dtype=complex)


def multiplier(values):
    values = np.asarray(values)
    n      = values.size

    def apply(v):
        return values * v

    def adjoint(v):
        return np.conj(values) * v

    return LinearOperator((n, n), matvec=apply, rmatvec=adjoint, dtype=complex)


def identity(n):
    return LinearOperator((n, n), matvec=lambda v: v, rmatvec=lambda v: v, dtype=complex)


def commutator(chi, P):
    return chi @ P - P @ chi


def mismatch(chi_j, P, chi_i):
    n = chi_i.shape[0]
    return chi_j @ P @ (identity(n) - chi_i)


def periodized_projector(torus, line, N):
    """ext P^L_{<=N} fold on line samples; fold and ext are adjoint."""
    mask = low_pass_symbol(N).on(torus)

    def apply(v):
        folded = fold_values(v, torus, line)
        return extend_values(sfft.ifft(mask * sfft.fft(folded, norm="ortho"), norm="ortho"), torus, line)

    return LinearOperator((line.M, line.M), matvec=apply, rmatvec=apply, dtype=complex)


def p2p_operator(chi, torus, line, N):
    return chi @ (projector(line, N) - periodized_projector(torus, line, N)) @ chi


def dense_norm(A):
    """Largest singular value from the dense matrix; reference for small sizes."""
    n      = A.shape[1]
    matrix = np.column_stack([A.matvec(e) for e in np.eye(n, dtype=complex)])
    return float(svdvals(matrix)[0])


# ── Experiment ────────────────────────────────────────────────────────────────

def _entry_norms(entry, j_pairs, levels, seed, T, M_bound, max_modes, tol):
    width = entry.N * T / entry.eta
    torus = make_grid(entry.L, resolve_points(entry.L, entry.N, width))
    line  = make_grid(entry.kappa * entry.L, entry.kappa * torus.M)
    if line.M > max_modes:
        raise ConfigurationError(
            f"{entry.label}: surrogate needs {line.M} modes, cap is {max_modes}"
        )
    u0  = random_band_limited(torus, 2 * entry.N, M_bound, [seed, entry.n])
    sel = pigeonhole_interval(u0, entry.eta, entry.N, T, M_bound)

    chi_line  = {j: build_cutoff(sel, j, line) for j in range(5)}
    chi_torus = {j: build_cutoff(sel, j, torus) for j in range(5)}
    P_line    = projector(line, entry.N)
    P_torus   = projector(torus, entry.N)

    def norm(A):
        return operator_norm(A, tol=tol, seed=seed)

    row = {"N": entry.N}
    for j in levels:
        X_line  = multiplier(chi_line[j].values)
        X_torus = multiplier(chi_torus[j].values)
        slope   = cutoff_derivatives(chi_line[j], 1)[1]

        row[f"p2p_j{j}"]              = norm(p2p_operator(X_line, torus, line, entry.N))
        row[f"commutator_line_j{j}"]  = norm(commutator(X_line, P_line))
        row[f"commutator_torus_j{j}"] = norm(commutator(X_torus, P_torus))
        row[f"commutator_bound_j{j}"] = 10.0 / entry.N * slope

    for j, i in j_pairs:
        mis_line  = mismatch(multiplier(chi_line[j].values), P_line, multiplier(chi_line[i].values))
        mis_torus = mismatch(multiplier(chi_torus[j].values), P_torus, multiplier(chi_torus[i].values))
        row[f"mismatch_line_j{j}_i{i}"]  = norm(mis_line)
        row[f"mismatch_torus_j{j}_i{i}"] = norm(mis_torus)
    logger.info("lp-check %s done (torus M=%d, line M=%d)", entry.label, torus.M, line.M)
    return row


def run_lp_estimates(schedule, j_pairs, seed, *, T, M_bound, max_modes=8192, tol=1e-13, workers=1):
    """
    Norms of the p2p, commutator and mismatch operators per entry, the
    commutator bound 10/N * max|d chi^j|, and the torus versions.
    """
    validate_schedule(schedule, M_bound, T)
    for j, i in j_pairs:
        if not (0 <= j < i <= 4):
            raise ConfigurationError(f"cutoff pair ({j}, {i}) must satisfy 0 <= j < i <= 4")
    levels = sorted({k for pair in j_pairs for k in pair})

    rows = map_entries(
        lambda entry: _entry_norms(entry, j_pairs, levels, seed, T, M_bound, max_modes, tol),
        schedule, workers,
    )
    report = ExperimentReport(name="lp-check").add_table(pd.DataFrame(rows))

    for j in levels:
        report.add_verdict(f"p2p_decreasing_j{j}",        f"decreasing:p2p_j{j}")
        report.add_verdict(f"commutator_decreasing_j{j}", f"decreasing:commutator_line_j{j}")
        report.add_verdict(f"commutator_bounded_j{j}",    f"leq:commutator_line_j{j}:commutator_bound_j{j}:0")
    for j, i in j_pairs:
        report.add_verdict(f"mismatch_decreasing_j{j}_i{i}", f"decreasing:mismatch_line_j{j}_i{i}")
        report.add_verdict(
            f"mismatch_below_commutator_j{j}_i{i}",
            f"leq:mismatch_line_j{j}_i{i}:commutator_line_j{i}:1e-10",
        )
    return report
