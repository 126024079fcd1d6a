from commands import approx, lp_check, mass_loc, norms, perturb, pigeonhole, solve, weak_wp, witness

# subcommand -> module exposing run(cfg, out_dir)
COMMANDS = {
    "solve":      solve,
    "approx":     approx,
    "mass-loc":   mass_loc,
    "weak-wp":    weak_wp,
    "perturb":    perturb,
    "lp-check":   lp_check,
    "pigeonhole": pigeonhole,
    "witness":    witness,
    "norms":      norms,
}
