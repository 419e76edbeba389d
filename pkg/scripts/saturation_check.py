#!/usr/bin/env python3
"""Delivered throughput and drops against offered load on a forced link.

Useful for checking the stack in isolation from the channel: with an
error-free MCS 28 link the knee sits at the PHY ceiling.
"""

import argparse

import numpy as np

from subthz.link import LinkModel, LinkState, tb_bytes
from subthz.mac import StackConfig, run_realization, saturation_threshold_mbps


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--mcs", type=int, default=28)
    ap.add_argument("--bler", type=float, default=0.0)
    ap.add_argument("--duration", type=float, default=9.0)
    ap.add_argument("--no-harq", action="store_true")
    args = ap.parse_args()

    model = LinkModel()
    tb = tb_bytes(model.table, args.mcs, model.budget, model.slot_s, model.utilization)
    link = LinkState.ideal(tb, bler=args.bler, mcs=args.mcs)
    sat = saturation_threshold_mbps(link)
    print(f"MCS {args.mcs}: TB {tb} B, ceiling {link.max_phy_mbps:.1f} Mbps, saturation {sat:.1f} Mbps")
    print(f"{'offered':>9} {'delivered':>10} {'drop %':>7} {'lat ms':>8}")
    for frac in (0.25, 0.5, 0.75, 0.9, 1.0, 1.1, 1.25, 1.5):
        cfg = StackConfig(app_rate_mbps=frac * sat, run_duration_s=args.duration,
                          harq_enabled=not args.no_harq)
        m = run_realization(link, cfg, np.random.default_rng(0))
        print(f"{m.offered_mbps:9.1f} {m.delivered_mbps:10.1f} {m.drop_pct:7.2f} {m.mean_latency_ms:8.2f}")


if __name__ == "__main__":
    main()
