#!/usr/bin/env python3
"""Flat-geodesic and sphere demos: eigenfunctions vanishing on rational
geodesics, zero-free witnesses along an irrational one, the continued
fraction table behind them, and the zonal-harmonic parallel survey.
"""

import argparse
import json
import math
import sys
import tempfile
from pathlib import Path

from toral_nodal.cli import main as cli_main


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--beta", type=float, default=math.sqrt(2.0))
    ap.add_argument("--kmax", type=int, default=8)
    ap.add_argument("--out", default="out/counterexamples.jsonl")
    args = ap.parse_args()
    cfg = {
        "beta": args.beta,
        "k_max": args.kmax,
        "v0": [0.3, 0.4],
        "theta0": [math.pi / 2, math.acos(1 / math.sqrt(3.0))],
        "prime_cap": 101,
        "rational": [[1, 0, 0.0, 1], [0, 1, 0.0, 2], [1, 1, 0.0, 3],
                     [1, 2, 0.7, 2], [2, 3, 1.3, 2], [3, 4, 0.0, 2]],
    }
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
        json.dump(cfg, fh)
        cfg_path = fh.name
    try:
        return cli_main(["exceptions", "--config", cfg_path, "--out", args.out])
    finally:
        Path(cfg_path).unlink(missing_ok=True)


if __name__ == "__main__":
    sys.exit(main())
