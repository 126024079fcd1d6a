from analysis.experiments import run_mass_localization


def run(cfg, out_dir):
    return run_mass_localization(
        cfg.schedule(), cfg["schedule.M_bound"], cfg["schedule.T"], cfg["mass_loc.j"], cfg.seed,
        dt=cfg["schedule.dt"], stride=cfg["schedule.stride"], sigma=cfg["schedule.sigma"],
        workers=cfg["run.workers"],
    )
