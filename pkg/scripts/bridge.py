"""Two exciter clusters joined by a chain of relay tags.

Prints the graph path and the delivered frames' hop counts. Pass
``--drop 5`` to remove the middle relay and watch delivery stop.
"""
import argparse

from t2tnet.rf import RfEnvironment
from t2tnet.scenarios import ScenarioConfig, bridge_deployment, run_scenario
from t2tnet.topology import Deployment, build_graph, shortest_path


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--drop", type=int, default=None, help="tag id to remove before routing")
    args = ap.parse_args()

    dep = bridge_deployment()
    if args.drop is not None:
        dep = Deployment(dep.exciters, [t for t in dep.tags if t[0] != args.drop], dep.area_side)
        print("path without tag", args.drop, "->", shortest_path(build_graph(RfEnvironment(), dep), 1, 2))
        return
    out = run_scenario(ScenarioConfig("bridge"))
    print(out["bridge_graph.csv"], end="")
    print(out["bridge_deliveries.csv"], end="")


if __name__ == "__main__":
    main()
