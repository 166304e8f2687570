#!/usr/bin/env python3
"""Ensemble sweep of the zero-count and restriction-norm ratios.

One row per (n, seed): certified sign changes, arc-crowding max, L^p
restriction norms, and the theorem-shaped ratios; plus a percentile summary
and an SVG scatter of ratio against frequency.
"""

import argparse
import sys

from toral_nodal.cli import main as cli_main


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", default="1105,4225,5525",
                    help="comma list or half-open range a..b")
    ap.add_argument("--seeds", type=int, default=20, help="seeds per n")
    ap.add_argument("--seed", type=int, default=0, help="master seed")
    ap.add_argument("--jobs", type=int, default=2)
    ap.add_argument("--out", default="out/theorem_sweep.jsonl")
    args = ap.parse_args()
    return cli_main(["sweep", "--n", args.n, "--seeds", str(args.seeds),
                     "--seed", str(args.seed), "--jobs", str(args.jobs),
                     "--out", args.out, "--svg"])


if __name__ == "__main__":
    sys.exit(main())
