#!/usr/bin/env python3
"""Short-arc audit table over a range of circles.

Runs the enumeration, arc-crowding max, Jarnik window audit, diameter-log
bound, and pair-product checks per representable n, and writes JSONL + CSV.
"""

import argparse
import sys

from toral_nodal.cli import main as cli_main


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nmax", type=int, default=5000,
                    help="audit circles with 1 <= n < nmax")
    ap.add_argument("--out", default="out/lattice_scan.jsonl")
    args = ap.parse_args()
    return cli_main(["lattice", "--n", f"1..{args.nmax}", "--out", args.out])


if __name__ == "__main__":
    sys.exit(main())
