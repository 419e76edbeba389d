#!/usr/bin/env python3
"""Running mean and CI half-width of one campaign as realizations accumulate."""

import argparse

from subthz.config import load_config
from subthz.experiment import campaign_spec, emit_convergence, write_campaign
from subthz.montecarlo import convergence_analysis, geometric_checkpoints, run_campaign


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenario", default="UMi")
    ap.add_argument("--condition", default="NLOS")
    ap.add_argument("--pairing", default="Ant3")
    ap.add_argument("--rate", type=float, default=50.0)
    ap.add_argument("-n", "--realizations", type=int, default=4000)
    ap.add_argument("--metric", default="delivered_mbps")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="results/convergence")
    args = ap.parse_args()

    cfg = load_config()
    spec = campaign_spec(cfg, args.scenario, args.condition, args.pairing, args.rate, args.realizations)
    res = run_campaign(spec, workers=args.workers)
    d = write_campaign(res, f"{args.out}/{spec.label}")
    emit_convergence(res, d / "convergence.svg")

    x = res.column(args.metric)
    print(f"{'n':>6} {'mean':>10} {'half-width':>11}")
    for p in convergence_analysis(x, geometric_checkpoints(x.size)):
        print(f"{p.n:6d} {p.running_mean:10.3f} {p.ci_half_width:11.4f}")


if __name__ == "__main__":
    main()
