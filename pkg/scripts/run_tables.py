"""Verify every shipped commutator and adjoint table; write markdown and JSON reports."""

import argparse
from pathlib import Path

from swmhd_lie import liealg, swmhd, tables


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/tables")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for case_id in ("free", "gravity", "coriolis", "full"):
        alg = liealg.BasisAlgebra.from_fields(swmhd.generators(case_id), swmhd.get_case(case_id).algebra_label)
        for kind in ("commutator", "adjoint"):
            rep = tables.verify_table(alg, tables.shipped_document(kind, case_id))
            (out / f"{kind}_{case_id}.md").write_text(rep.to_markdown())
            (out / f"{kind}_{case_id}.json").write_text(rep.to_json())
            print(f"{kind:10s} {case_id:9s} {rep.counts()}")


if __name__ == "__main__":
    main()
