from analysis.experiments import run_approximation


def run(cfg, out_dir):
    return run_approximation(
        cfg.schedule(), cfg["schedule.M_bound"], cfg["schedule.T"], cfg.seed,
        dt=cfg["schedule.dt"], stride=cfg["schedule.stride"],
        j=cfg["mass_loc.j"], sigma=cfg["schedule.sigma"], workers=cfg["run.workers"],
    )
