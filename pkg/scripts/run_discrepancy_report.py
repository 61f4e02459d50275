"""Residuals of printed vs corrected closed-form solutions at two parameter points."""

import argparse
import json
from pathlib import Path

from swmhd_lie import reductions


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/discrepancies.json")
    args = ap.parse_args()
    result = {}
    for params in ({"g": 1.0, "f0": 1.0}, {"g": 1.3, "f0": 0.8}):
        key = f"g={params['g']:g},f0={params['f0']:g}"
        result[key] = reductions.discrepancy_report(params)
        for row in result[key]:
            print(f"{key:14s} {row['case']:16s} printed {row['printed_max_residual']:.2e}  "
                  f"corrected {row['corrected_max_residual']:.2e}")
    path = Path(args.out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(result, indent=2, sort_keys=True, default=float))


if __name__ == "__main__":
    main()
