import logging

import numpy as np

from analysis.data import reference_solution
from analysis.diagnostics import energy, l2_norm, strichartz_norm
from analysis.dynamics import duhamel_residual, solve
from analysis.reports import ExperimentReport
from analysis.snapshots import write_snapshots

logger = logging.getLogger(__name__)


def run(cfg, out_dir):
    """
    Single solve from the [grid]/[solver]/[data] sections:
      - conservation (mass and energy drift) and the Duhamel residual
      - error against the closed form when the generator has one
      - trajectory written as a binary snapshot file when run.snapshots is set
    """
    solver = cfg.solver()
    u0     = cfg.initial_data()
    traj   = solve(u0, solver)

    energies = np.array([energy(traj.field(i), solver) for i in range(len(traj))])
    e0       = abs(energies[0])
    drift    = float(np.max(np.abs(energies - energies[0])) / e0) if e0 > 0 else float(np.max(np.abs(energies)))

    report = ExperimentReport(name="solve")
    report.add_series("time", [traj.times[0], traj.times[-1]])
    report.add_series("mass_drift", [traj.mass_drift])
    report.add_series("energy_drift", [drift])
    report.add_series("s_norm", [strichartz_norm(traj)])
    if len(traj) >= 3:
        report.add_series("duhamel_residual", [duhamel_residual(traj)])
        report.add_verdict("duhamel", f"at_most:duhamel_residual:{cfg['tolerance.duhamel']!r}")

    mass_tol = cfg["tolerance.mass_drift_projected"] if solver.projected else cfg["tolerance.mass_drift_exact"]
    report.add_verdict("mass_conserved", f"at_most:mass_drift:{mass_tol!r}")
    if not solver.projected:
        report.add_verdict("energy_conserved", f"at_most:energy_drift:{cfg['tolerance.energy_drift']!r}")

    reference = reference_solution(u0.grid, cfg.data_spec(), solver.sigma, traj.times[-1], solver.coupling)
    if reference is not None and not solver.projected:
        report.add_series("reference_error", [l2_norm(traj.final - reference)])
        report.add_verdict("matches_reference", f"at_most:reference_error:{cfg['tolerance.reference']!r}")

    if cfg["run.snapshots"]:
        path = write_snapshots(traj, out_dir / "trajectory.nls")
        report.flag("snapshots", str(path))
    return report
