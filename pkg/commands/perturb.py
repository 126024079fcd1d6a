from analysis.data import gaussian, random_band_limited
from analysis.experiments import run_perturbation


def run(cfg, out_dir):
    grid   = cfg.perturb_grid()
    solver = cfg.perturb_solver()
    u0     = gaussian(grid, cfg["perturb.amplitude"])
    # perturbation direction: unit-norm random data inside the truncation band
    direction = random_band_limited(grid, solver.N, 1.0, cfg.seed)
    return run_perturbation(
        u0, cfg["perturb.eps"], direction, cfg["perturb.forcing"], solver.N, solver.T,
        dt=solver.dt, stride=solver.stride, sigma=solver.sigma, eps0=cfg["perturb.eps0"],
    )
