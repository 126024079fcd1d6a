from analysis.diagnostics import norm_report
from analysis.dynamics import solve
from analysis.experiments import run_equicontinuity
from analysis.reports import ExperimentReport


def run(cfg, out_dir):
    """NormReport of the configured solve, then the equicontinuity ensemble (norms.ensemble > 0)."""
    traj   = solve(cfg.initial_data(), cfg.solver())
    norms  = norm_report(traj, cfg["norms.R"])
    report = ExperimentReport(name="norms")
    for key, value in norms.values.items():
        report.add_series(key, [value])

    members = cfg["norms.ensemble"]
    if members > 0:
        taus, ys = cfg.norms_shifts()
        ensemble = run_equicontinuity(
            cfg.norms_grid(), cfg["norms.N"], cfg["norms.M_bound"], cfg["norms.T"],
            taus, ys, cfg["norms.R"],
            [[cfg.seed, m] for m in range(members)],
            dt=cfg["norms.dt"], sigma=cfg["norms.sigma"],
        )
        report.absorb(ensemble)
    return report
