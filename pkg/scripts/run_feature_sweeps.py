#!/usr/bin/env python3
"""Run the three hyperparameter sweeps on the half-constant synthetic data
and render the weight-norm curves.

Writes one directory per method under --out with raw.csv / aggregate.csv /
manifest.json plus an SVG of the aggregate curves.
"""

import argparse
import sys

from labelvar.cli import run_command


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/feature_sweeps")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--grid-count", type=int, default=20)
    args = parser.parse_args()

    for method in ("weight_decay", "label_smoothing", "mixup"):
        out_dir = f"{args.out}/{method}"
        code = run_command([
            "sweep", "--recipe", "defC1", "--method", method,
            "--grid-count", str(args.grid_count),
            "--seed", str(args.seed), "--jobs", str(args.jobs),
            "--out", out_dir,
        ])
        if code != 0:
            return code
        code = run_command([
            "plot", "--csv", f"{out_dir}/aggregate.csv",
            "--kind", "sweep_curve", "--out", f"{out_dir}/curves.svg",
        ])
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
