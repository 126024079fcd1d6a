import logging
import math

from analysis.cutoffs import build_cutoff, cutoff_report, nesting_defect, pigeonhole_interval
from analysis.data import random_band_limited
from analysis.reports import ExperimentReport

logger = logging.getLogger(__name__)


def run(cfg, out_dir):
    """
    Pigeonhole selection over a seeded ensemble of bounded-mass data, the
    nesting of chi^0..chi^4 for the first draw, and the derivative report of
    chi^j (cutoff.j).
    """
    grid  = cfg.pigeonhole_grid()
    eta   = cfg["pigeonhole.eta"]
    N     = cfg["pigeonhole.N"]
    T     = cfg["pigeonhole.T"]
    bound = cfg["pigeonhole.M_bound"]

    report    = ExperimentReport(name="pigeonhole")
    selection = None
    for trial in range(cfg["pigeonhole.trials"]):
        u0  = random_band_limited(grid, 2 * N, bound, [cfg.seed, trial])
        sel = pigeonhole_interval(u0, eta, N, T, bound)
        report.append("boundary_mass", sel.boundary_mass)
        report.append("interval_index", sel.index)
        selection = selection or sel

    families = [build_cutoff(selection, j, grid) for j in range(5)]
    report.add_series("nesting_defect", [nesting_defect(a, b) for a, b in zip(families, families[1:])])
    report.add_verdict("boundary_mass_bounded", f"at_most:boundary_mass:{math.sqrt(eta) / 4!r}")
    report.add_verdict("cutoffs_nested", "at_most:nesting_defect:0")
    report.flag("subinterval_count", selection.count)

    report.absorb(cutoff_report(families[cfg["cutoff.j"]], cfg["cutoff.k_max"]))
    return report
