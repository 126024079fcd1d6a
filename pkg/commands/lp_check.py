from analysis.lp_estimates import run_lp_estimates


def run(cfg, out_dir):
    return run_lp_estimates(
        cfg.lp_schedule(), cfg.lp_pairs(), cfg.seed,
        T=cfg["lp.T"], M_bound=cfg["lp.M_bound"],
        max_modes=cfg["lp.max_modes"], tol=cfg["lp.tol"], workers=cfg["run.workers"],
    )
