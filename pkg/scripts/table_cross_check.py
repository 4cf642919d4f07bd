"""Closed-form efficiency table next to simulated estimates of the same cells.

Each (M, p_c) pair of the unknown-topology multi-hop cell is simulated
``--runs`` times and compared against the analytic success probability.
"""
import argparse

from t2tnet.efficiency import EfficiencyParams, cross_validate, table_csv


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--runs", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print(table_csv(EfficiencyParams(H=3, M=2, p_c=0.3)))
    print(f"{'M':>2} {'p_c':>4} {'analytic':>9} {'sim':>7} {'3 sigma':>8}  ok")
    for m in (1, 2, 3):
        for p_c in (0.1, 0.3, 0.5):
            r = cross_validate("B", "unknown", "MHR", EfficiencyParams(M=m, p_c=p_c), args.runs, base_seed=args.seed)
            print(f"{m:>2} {p_c:>4} {r.analytic.success_probability:9.4f} {r.simulated_success:7.4f} "
                  f"{3 * r.sigma:8.4f}  {r.agrees}")
    for topo in ("known", "unknown"):
        r = cross_validate("A", topo, "MHR", EfficiencyParams(H=3, M=2, p_c=0.3), args.runs, base_seed=args.seed)
        print(f"phase-shift range, {topo} topology, multi-hop: simulated success {r.simulated_success:.4f}")


if __name__ == "__main__":
    main()
