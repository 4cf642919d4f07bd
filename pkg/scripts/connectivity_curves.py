"""Single-hop vs multi-hop connectivity against tag count, with and without cancellation.

    python scripts/connectivity_curves.py --area 30 --runs 1000
"""
import argparse
import csv
import io

from t2tnet.scenarios import ScenarioConfig, run_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--area", type=float, default=30.0, help="square side in metres")
    ap.add_argument("--runs", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cfg = ScenarioConfig.from_dict({"scenario": "coverage", "seed": args.seed, "runs": args.runs,
                                    "params": {"area_side": args.area}})
    table = run_scenario(cfg)["coverage.csv"]
    rows = list(csv.DictReader(io.StringIO(table)))
    print(f"{'mode':<10} {'N':>3} {'SH':>7} {'MH':>7}")
    for r in rows:
        print(f"{r['mode']:<10} {r['N']:>3} {float(r['sh_prob']):7.3f} {float(r['mh_prob']):7.3f}")


if __name__ == "__main__":
    main()
