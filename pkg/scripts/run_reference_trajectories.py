"""Integrate every reference reduced-ODE run through the CLI and report self-convergence."""

import argparse
import sys

from swmhd_lie import reductions
from swmhd_lie.cli import REFERENCE_RUNS, main as cli


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/trajectories")
    args = ap.parse_args()
    worst = 0
    for name, ref in REFERENCE_RUNS.items():
        worst = max(worst, cli(["integrate", "--case", name, "--out", args.out]))
        drift = reductions.self_convergence(name, ref["params"], ref["initial"], tuple(ref["span"]),
                                            constants=ref["constants"])
        print(f"  self-convergence (tolerances halved): {drift:.2e}")
    sys.exit(worst)


if __name__ == "__main__":
    main()
