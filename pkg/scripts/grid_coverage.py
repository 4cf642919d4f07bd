"""Per-cell reception on a small grid, forward and backward of the exciter.

Writes grid_cells.csv / grid_summary.csv under --out and prints the summary.
"""
import argparse
import sys

from t2tnet.cli import main as cli


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="results/grid")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    code = cli(["grid-coverage", "--seed", str(args.seed), "--out", args.out])
    if code:
        sys.exit(code)
    with open(f"{args.out}/grid_summary.csv") as fh:
        print(fh.read(), end="")


if __name__ == "__main__":
    main()
