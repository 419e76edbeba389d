#!/usr/bin/env python3
"""Run the full default sweep and write every figure and table.

With the packaged config this is 288 campaigns; pass --realizations to
trade accuracy for time (e.g. 20 for a quick look).

    python3 scripts/reproduce_figures.py --out results/ --realizations 20 --workers 4
"""

import argparse
import logging

from subthz.config import load_config
from subthz.experiment import run_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config")
    ap.add_argument("--out", default="results")
    ap.add_argument("--realizations", type=int)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--seed", type=int)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    cfg = load_config(args.config).with_overrides(realizations=args.realizations,
                                                  master_seed=args.seed)
    results = run_sweep(cfg, args.out, workers=args.workers)
    print(f"{len(results)} campaigns written to {args.out}")


if __name__ == "__main__":
    main()
