#!/usr/bin/env python3
"""Plot (as text) when each coverage map last produced novelty.

Demonstrates the motivating effect: probe-edge buckets go quiet early while
the matcher map keeps yielding new entries, so using the matcher map as a
second interestingness signal keeps the campaign moving.

Usage:
    python scripts/saturation.py --target vex --execs 80000 --seed 11
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from matchfuzz.campaign import CampaignConfig, run_campaign  # noqa: E402

BUCKETS = 40


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--target", default="vex")
    ap.add_argument("--execs", type=int, default=80_000)
    ap.add_argument("--seed", type=int, default=11)
    args = ap.parse_args()

    cfg = CampaignConfig(
        seed=args.seed, execs=args.execs, max_functions=1, max_blocks=4, max_instrs=5
    )
    result = run_campaign(args.target, None, cfg)
    events = result.stats.novelty_events

    step = max(1, args.execs // BUCKETS)
    edge_hist = [0] * BUCKETS
    bit_hist = [0] * BUCKETS
    for e, nb, nm in events:
        slot = min(BUCKETS - 1, (e - 1) // step)
        edge_hist[slot] += nb
        bit_hist[slot] += nm

    print(f"{args.target} seed {args.seed}: novelty per {step}-execution window")
    print(f"{'window':>10}  {'new edge buckets':>18}  {'new matcher bits':>18}")
    for i in range(BUCKETS):
        lo = i * step
        print(f"{lo:>10}  {edge_hist[i]:>18}  {bit_hist[i]:>18}")

    last_edge = max((e for e, nb, _ in events if nb > 0), default=0)
    last_bit = max((e for e, _, nm in events if nm > 0), default=0)
    print(f"\nlast edge-bucket novelty at execution {last_edge}")
    print(f"last matcher-bit novelty at execution {last_bit}")
    print(f"final: {result.stats.matcher_bits} matcher bits, {result.stats.edge_buckets} edge buckets")
    return 0


if __name__ == "__main__":
    sys.exit(main())
