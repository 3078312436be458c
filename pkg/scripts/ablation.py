#!/usr/bin/env python3
"""Paired-run ablation: full feedback vs. stripped feedback vs. byte havoc.

Runs N seeds of each configuration with equal budgets on one target and
prints final coverage side by side, mirroring the feedback-contribution
comparison the workbench is built to reproduce.

Usage:
    python scripts/ablation.py --target vex --execs 50000 --seeds 3
"""

import argparse
import statistics
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from matchfuzz.campaign import CampaignConfig, run_campaign  # noqa: E402


def one_run(target, seed, execs, guidance, mutator):
    cfg = CampaignConfig(
        seed=seed,
        execs=execs,
        guidance=guidance,
        mutator=mutator,
        max_functions=1,
        max_blocks=4,
        max_instrs=5,
    )
    t0 = time.monotonic()
    r = run_campaign(target, None, cfg)
    return r.stats, time.monotonic() - t0


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--target", default="vex")
    ap.add_argument("--execs", type=int, default=50_000)
    ap.add_argument("--seeds", type=int, default=3, help="number of paired runs")
    ap.add_argument("--seed-base", type=int, default=100)
    args = ap.parse_args()

    rows = []
    for i in range(args.seeds):
        seed = args.seed_base + i
        full, t_full = one_run(args.target, seed, args.execs, True, "ir")
        bare, t_bare = one_run(args.target, seed, args.execs, False, "ir")
        byte, t_byte = one_run(args.target, seed, args.execs, True, "bytes")
        rows.append((seed, full, bare, byte))
        print(
            f"seed {seed}: full={full.matcher_bits} bare={bare.matcher_bits} "
            f"bytes={byte.matcher_bits}  ({t_full:.0f}s/{t_bare:.0f}s/{t_byte:.0f}s)"
        )

    print(f"\n{args.target}, {args.execs} executions per run, {args.seeds} seeds")
    print(f"{'config':<12}{'matcher bits (median)':>24}{'edge buckets (median)':>24}")
    for label, picker in (
        ("full", lambda r: r[1]),
        ("bare", lambda r: r[2]),
        ("bytes", lambda r: r[3]),
    ):
        bits = statistics.median(picker(r).matcher_bits for r in rows)
        buckets = statistics.median(picker(r).edge_buckets for r in rows)
        print(f"{label:<12}{bits:>24}{buckets:>24}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
