"""
Command-line entry point.

  python lab.py <subcommand> --config PATH [--out DIR] [--seed N] [--quiet]

Exit codes: 0 all verdicts pass, 2 finished with failing verdicts, 1 error.
"""

import argparse
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path

from analysis.config import config_hash, load_config
from analysis.errors import ConfigParseError, LabError
from analysis.reports import write_report
from commands import COMMANDS

logger = logging.getLogger(__name__)


# ── Parser ────────────────────────────────────────────────────────────────────

def build_parser():
    parser = argparse.ArgumentParser(prog="lab", description="Truncated cubic NLS experiments.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="path to a key = value config file")
    parser.add_argument("--out", default=None, help="output directory (overrides run.out)")
    parser.add_argument("--seed", type=int, default=None, help="seed (overrides run.seed)")
    parser.add_argument("--quiet", action="store_true", help="only log warnings and errors")
    return parser


def resolve_config(path, command, seed=None):
    """Loads the config, checks it is meant for `command` and applies CLI overrides."""
    cfg = load_config(path)
    if "run.experiment" in cfg.explicit and cfg.experiment != command:
        raise ConfigParseError(
            f"config is for '{cfg.experiment}', not '{command}'", key="run.experiment"
        )
    overrides = {"run.experiment": command}
    if seed is not None:
        overrides["run.seed"] = seed
    return cfg.with_values(overrides)


# ── Main ──────────────────────────────────────────────────────────────────────

def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    )
    try:
        cfg     = resolve_config(args.config, args.command, args.seed)
        out_dir = Path(args.out if args.out is not None else cfg["run.out"])
        logger.info("running %s (seed %d, config %s)", args.command, cfg.seed, config_hash(cfg)[:12])

        report = COMMANDS[args.command].run(cfg, out_dir)
        report.provenance.update(
            config_hash=config_hash(cfg),
            seed=cfg.seed,
            timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        )
        path = write_report(report, out_dir / f"{args.command}.report")
    except (LabError, OSError) as exc:
        logger.error("%s failed: %s", args.command, exc)
        print(f"error: {exc}", file=sys.stderr)
        return 1

    failing = [name for name, ok in report.verdicts.items() if not ok]
    if failing:
        logger.warning("%s finished with failing verdicts: %s", args.command, ", ".join(failing))
        return 2
    logger.info("%s passed; report at %s", args.command, path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
