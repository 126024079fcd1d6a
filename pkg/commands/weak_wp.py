from analysis.data import gaussian
from analysis.experiments import run_weak_wp


def run(cfg, out_dir):
    grid   = cfg.weak_grid()
    solver = cfg.weak_solver()
    report = run_weak_wp(
        cfg.probes(),
        gaussian(grid, cfg["weak.amplitude"]),
        cfg["weak.escape"],
        cfg.weak_schedule(),
        solver.T,
        h=gaussian(grid, cfg["weak.escape_amplitude"]),
        rate=cfg["weak.rate"],
        shift=cfg["weak.shift"],
        dt=solver.dt,
        stride=solver.stride,
        sigma=solver.sigma,
        workers=cfg["run.workers"],
    )
    if cfg["weak.escape"] != "none":
        report.add_series("final_discrepancy", [report.series["discrepancy"][-1]])
        report.add_verdict("final_discrepancy_small", f"at_most:final_discrepancy:{cfg['weak.threshold']!r}")
    return report
