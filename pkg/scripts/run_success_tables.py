#!/usr/bin/env python3
"""Success-rate grids for the float-centered methods.

Sweeps tracked satellites x phase noise x baselines and writes one CSV row
per cell and method, mirroring the layout of the published success-rate
tables at desk scale.  Expect a few minutes at the default trial count.
"""

import argparse
import sys

from riemocad.cli import main as cli_main


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--baselines", type=str, default="1,2,3")
    ap.add_argument("--out", type=str, default="results/success_tables")
    args = ap.parse_args()
    return cli_main([
        "sweep", "--sats", "4..8", "--sigma-mm", "7,5,3,1",
        "--baselines", args.baselines,
        "--methods", "uc_ils,ac_ils,riemocad_lf",
        "--trials", str(args.trials), "--seed", str(args.seed),
        "--out", args.out,
    ])


if __name__ == "__main__":
    sys.exit(main())
