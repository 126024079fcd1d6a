from analysis.witness import run_witness_search


def run(cfg, out_dir):
    return run_witness_search(cfg.witness_problem(), cfg.optimizer())
