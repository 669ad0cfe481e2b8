#!/usr/bin/env python3
"""Search-space sizes and success rates for the bound-driven solvers.

Paired comparison of the tight-form solver against the baseline centered
at the affine-constrained float solution, on common random numbers.
"""

import argparse
import sys

from riemocad.cli import main as cli_main


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--sats", type=str, default="4..8")
    ap.add_argument("--sigma-mm", type=str, default="7,5,3,1")
    ap.add_argument("--cap", type=int, default=10_000)
    ap.add_argument("--out", type=str, default="results/search_space")
    args = ap.parse_args()
    return cli_main([
        "sweep", "--sats", args.sats, "--sigma-mm", args.sigma_mm,
        "--baselines", "1", "--methods", "mc_lambda,riemocad_tf",
        "--trials", str(args.trials), "--seed", str(args.seed),
        "--cap", str(args.cap), "--out", args.out,
    ])


if __name__ == "__main__":
    sys.exit(main())
