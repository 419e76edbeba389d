"""Command-line front end.

    subthz --config cfg.yaml --out results/ --figure curves --figure tables
    subthz --dump-config my.yaml

Each flag falls back to an ``SUBTHZ_<FLAG>`` environment variable.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .config import ConfigError, env_overrides, load_config
from .experiment import run_sweep
from .montecarlo import CampaignError

FIGURES = ("snr-cdf", "curves", "ci", "tables")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="subthz", description="Sub-THz single-link Monte-Carlo campaigns")
    p.add_argument("--config", help="YAML campaign configuration (default: packaged config)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--realizations", type=int, help="realizations per campaign (overrides config)")
    p.add_argument("--seed", type=int, help="64-bit master seed (overrides config)")
    p.add_argument("--workers", type=int, help="worker processes per campaign")
    p.add_argument("--figure", action="append", choices=FIGURES,
                   help="artifact family to emit; repeatable (default: all)")
    p.add_argument("--trace", action="store_true", default=None,
                   help="write a per-slot CSV for realization 0 of every campaign")
    p.add_argument("--fine", action="store_true", help="use the fine rate grid from the config")
    p.add_argument("--dump-config", metavar="PATH", help="write the effective config and exit")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _apply_env(args, environ=None):
    env = env_overrides(environ)
    for key in ("config", "out"):
        if getattr(args, key) is None and key in env:
            setattr(args, key, env[key])
    for key in ("realizations", "seed", "workers"):
        if getattr(args, key) is None and key in env:
            setattr(args, key, int(env[key]))
    if args.figure is None and "figure" in env:
        args.figure = [f.strip() for f in env["figure"].split(",") if f.strip()]
    if args.trace is None:
        args.trace = env.get("trace", "").lower() in ("1", "true", "yes", "on")
    return args


def main(argv=None, environ=None) -> int:
    args = _apply_env(build_parser().parse_args(argv), environ)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        cfg = cfg.with_overrides(realizations=args.realizations, master_seed=args.seed,
                                 workers=args.workers)
        if args.dump_config:
            cfg.dump(args.dump_config)
            return 0
        if not args.out:
            raise ConfigError("--out is required")
        figures = tuple(args.figure or FIGURES)
        bad = set(figures) - set(FIGURES)
        if bad:
            raise ConfigError(f"unknown figure(s) {sorted(bad)}")
        sweep = cfg.sweep
        if args.fine:
            if not sweep.fine_rates_mbps:
                raise ConfigError("config has no fine_rates_mbps")
            sweep = replace(sweep, app_rates_mbps=sweep.fine_rates_mbps)
        run_sweep(cfg, args.out, figures=figures, workers=cfg.workers, trace=args.trace, sweep=sweep)
    except (ConfigError, ValueError, CampaignError) as exc:
        print(f"subthz: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"subthz: error: cannot write results: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
