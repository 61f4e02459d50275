"""Command-line entry point: ``swmhd-lie <command> ...``.

Exit codes: 0 success, 1 I/O or configuration error, 2 verification
mismatch, 3 numerical failure (wall hit, positivity loss).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import fvsolver as FV
from . import liealg as L
from . import reductions as R
from . import swmhd as S
from . import tables as T
from .config import ConfigError, RunConfig

OK, IO_ERROR, MISMATCH, NUMERICAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2, which here means "verification mismatch"
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(IO_ERROR)


# ---------------------------------------------------------------------------
# helpers

def _key_values(items) -> dict:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise UsageError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k.strip()] = float(v)
        except ValueError:
            raise UsageError(f"{k}: not a number: {v!r}") from None
    return out


def _floats(text: str | None) -> list[float] | None:
    if text is None:
        return None
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


class Output:
    """Collects files and writes them once the command has finished."""

    def __init__(self, cfg: RunConfig, command: str):
        self.cfg = cfg
        self.command = command
        self.dir = Path(cfg.output_dir)

    def header(self) -> list[str]:
        return self.cfg.header_lines(self.command)

    def write(self, name: str, text: str) -> Path:
        self.dir.mkdir(parents=True, exist_ok=True)
        path = self.dir / name
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
        return path

    def write_text(self, name: str, body: str, comment: str = "# ") -> Path:
        head = "".join(f"{comment}{line}\n" for line in self.header())
        return self.write(name, head + body)

    def write_json(self, name: str, payload) -> Path:
        doc = {"command": self.command, "config": self.cfg.to_dict(), "result": payload}
        return self.write(name, json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not serializable: {type(obj).__name__}")


def _case_params(cfg: RunConfig, case: S.SymmetryCase) -> tuple[float, float]:
    g = case.g if cfg.g is None else cfg.g
    f0 = case.f0 if cfg.f0 is None else cfg.f0
    if (g == 0) != (case.g == 0) or (f0 == 0) != (case.f0 == 0):
        raise ConfigError(f"case {case.case_id} needs g {'=' if case.g == 0 else '!='} 0 and "
                          f"f0 {'=' if case.f0 == 0 else '!='} 0; got g={g}, f0={f0}")
    return g, f0


# ---------------------------------------------------------------------------
# commands

def cmd_tables(cfg: RunConfig, out: Output) -> int:
    cases = [cfg.case] if cfg.case else list(S.CASES)
    status = OK
    for cid in cases:
        case = S.get_case(cid)
        alg = L.BasisAlgebra.from_fields(S.generators(cid), case.algebra_label, seed=cfg.seed)
        for kind in ("commutator", "adjoint"):
            rep = T.verify_table(alg, T.shipped_document(kind, cid))
            title = f"{kind} table, case {cid} ({case.algebra_label})"
            out.write_text(f"{kind}_{cid}.md", rep.to_markdown(title), comment="<!-- ")
            out.write_json(f"{kind}_{cid}.json", rep.to_dict())
            counts = rep.counts()
            print(f"{cid:9s} {kind:10s} " + " ".join(f"{k}={v}" for k, v in sorted(counts.items()))
                  + ("" if rep.ok else "  MISMATCH"))
            if not rep.ok:
                status = MISMATCH
    return status


def cmd_verify(cfg: RunConfig, out: Output, include=()) -> int:
    case = S.get_case(cfg.case or "full")
    g, f0 = _case_params(cfg, case)
    system = S.build_system(g, f0)
    rows = []
    ok = True
    probes = [(X, True) for X in S.generators(case.case_id, f0)]
    probes += [(X, False) for X in S.control_generators(case.case_id, f0)]
    seen = {X.name for X, _ in probes}
    for n in dict.fromkeys(include):
        if n not in seen:
            probes.append((S.lookup_generator(n, case.case_id, f0).named(n), False))
    for X, expected in probes:
        chk = S.verify_symmetry(X, system, trials=cfg.trials, tol=cfg.tol, seed=cfg.seed)
        good = chk.passed == expected
        ok &= good
        tag = "pass" if chk.passed else "fail"
        role = "basis" if expected else "control"
        note = "" if chk.passed else f" (residual H{chk.failed_residual})"
        print(f"{X.name:10s} {role:8s} {tag}{note}{'' if good else '  UNEXPECTED'}")
        rows.append({"name": X.name, "role": role, "passed": chk.passed, "as_expected": good,
                     "failed_residual": chk.failed_residual, "witness": chk.witness})
    out.write_json(f"verify_{case.case_id}.json", {"case": case.case_id, "g": g, "f0": f0, "checks": rows})
    n_pass = sum(r["passed"] for r in rows if r["role"] == "basis")
    print(f"{n_pass}/{len(case.names)} generators pass for case {case.case_id}")
    return OK if ok else MISMATCH


def cmd_optimal(cfg: RunConfig, out: Output, coeffs: dict) -> int:
    e = L.GenericElement(**coeffs)
    if not np.any(e.vector()):
        raise UsageError("at least one coefficient must be nonzero")
    cl = L.classify_branch(e)
    print(f"branch {cl.branch}: {cl.branch_form}")
    print(f"representative: {{{cl.representative}}}")
    out.write_json("optimal.json", {"element": coeffs, "branch": cl.branch, "branch_form": cl.branch_form,
                                     "representative": cl.representative, "normalized": list(cl.normalized)})
    return OK


def cmd_reduce(cfg: RunConfig, out: Output) -> int:
    name = cfg.case or "Z1"
    params = {**_physics(cfg), **cfg.params.get("params", {})}
    consts = cfg.params.get("constants", {})
    red = R.get_reduction(name)
    system = R.reduce(name, params)
    lines = [f"reduction {name}: similarity variable {red.variable_name}",
             f"parameters: {json.dumps(system.params, sort_keys=True)}",
             "reduced system on the section:"]
    lines += ["  " + s for s in system.display()]
    payload = {"case": name, "params": system.params, "invariant": True, "display": system.display()}
    status = OK
    if name in R.COMPACT_ODES:
        defect = R.dual_route_defect(name, params, consts, seed=cfg.seed)
        payload["compact_ode_defect"] = defect
        lines.append(f"compact ODE vs generic reduction: max defect {defect:.3e}")
        if defect > 1e-6:
            status = MISMATCH
    if name in R.CLOSED_FORM_NAMES and not (name == "X3" and system.params["f0"] != 0):
        reports = {}
        for form in ("printed", "corrected"):
            sol = R.closed_form_solution(name, params, consts, form)
            rep = R.residual_check(sol, tol=1e-8)
            reports[form] = rep.to_dict()
            lines.append(f"{form} closed form: max residual {max(rep.per_equation_max_residual):.3e} ({rep.status})")
        payload["residuals"] = reports
        if reports["corrected"]["status"] != "pass":
            status = MISMATCH
    text = "\n".join(lines) + "\n"
    print(text, end="")
    out.write_text(f"reduce_{_slug(name)}.txt", text)
    out.write_json(f"reduce_{_slug(name)}.json", payload)
    return status


def _slug(name: str) -> str:
    return name.replace("+", "_")


def _physics(cfg: RunConfig) -> dict:
    return {k: v for k, v in (("g", cfg.g), ("f0", cfg.f0)) if v is not None}


# reference runs for the reduced ODEs (the figure counterparts)
REFERENCE_RUNS = {
    "X1+a2X2": {"params": {"g": 1.0, "f0": 1.0, "a2": 1.0}, "constants": {"u0": 1.0, "a0": 2.0, "b0": 0.0},
                "initial": [0.0, 1.0], "span": [0.0, 5.0]},
    "X2+z2Z2": {"params": {"g": 1.0, "f0": 1.0, "z2": 1.0},
                "constants": {"u0": 1.0, "a0": 2.0, "v0": 1.0 / 3.0, "b0": 0.0},
                "initial": [1.0], "span": [0.0, 5.0]},
    "X1": {"params": {"g": 1.0, "f0": 1.0}, "constants": {"u0": 1.0, "a0": 2.0, "v0": 0.0, "b0": 0.0},
           "initial": [1.0], "span": [0.0, 5.0]},
    # near the A = 0 equilibrium U = 0, V = -2gH/f0; generic data blows up in finite time
    "Z1": {"params": {"g": 1.0, "f0": 1.0}, "constants": {},
           "initial": [1.0, 0.0, -1.96, 0.1, 0.0], "span": [0.0, 5.0]},
    # unit values except z2: at z2 = 1 the factor 1 + z2 sin(f0 t) vanishes at f0 t = 3 pi / 2
    "X2+a10X10+z2Z2": {"params": {"g": 1.0, "f0": 1.0, "z2": 0.5, "a10": 1.0},
                       "constants": {"h0": 1.0, "a0": 1.0},
                       "initial": [1.0, 1.0, 1.0], "span": [0.0, 10.0]},
}


def cmd_integrate(cfg: RunConfig, out: Output) -> int:
    name = cfg.case or "X1+a2X2"
    if name not in R.COMPACT_ODES:
        raise UsageError(f"no reduced ODE for {name}; choose from {sorted(R.COMPACT_ODES)}")
    ref = REFERENCE_RUNS[name]
    p = cfg.params
    params = {**ref["params"], **_physics(cfg), **p.get("params", {})}
    consts = {**ref["constants"], **p.get("constants", {})}
    initial = p.get("initial") or ref["initial"]
    span = tuple(p.get("span") or ref["span"])
    points = int(p.get("points", 101))
    ode_cfg = R.ODESolverConfig(rtol=p.get("rtol", 1e-8), atol=p.get("atol", 1e-10),
                                max_step=p.get("max_step", math.inf))
    s_eval = np.linspace(span[0], span[1], points)
    traj = R.integrate_reduced(name, params, initial, span, ode_cfg, consts, s_eval=s_eval)
    header = out.header() + [f"status: {traj.status}", f"message: {traj.message}"]
    out.write(f"trajectory_{_slug(name)}.csv", traj.to_csv(header))
    print(f"{name}: {traj.status}, {len(traj.s)} rows written; {traj.message}")
    return OK if traj.ok else NUMERICAL


def cmd_simulate(cfg: RunConfig, out: Output) -> int:
    p = cfg.params
    init = p.get("init", "X2-closed-form")
    g = 1.0 if cfg.g is None else cfg.g
    f0 = 1.0 if cfg.f0 is None else cfg.f0
    scheme = FV.SchemeConfig(cfl=p.get("cfl", 0.4))
    T_end = float(p.get("T", 0.5 if init in ("X2+a10X10+z2Z2", "galilean") else 1.0))
    if init == "X2-closed-form":
        sol = R.closed_form_solution("X2", {"g": g, "f0": f0}, p.get("constants"))
        ns = p.get("convergence") or [100, 200, 400, 800]
        rows = FV.convergence_study(sol, ns, T=T_end, g=g, f0=f0, cfg=scheme)
        out.write("convergence_X2.csv", FV.convergence_csv(rows, out.header()))
        for r in rows:
            order = "" if r.order is None else f"  order {r.order:.3f}"
            print(f"n={r.n_cells:5d}  L1 error {r.l1_error:.6e}{order}")
        return OK
    if init == "X2+a10X10+z2Z2":
        params = {"g": g, "f0": f0, "z2": p.get("z2", 0.5), "a10": p.get("a10", 1.0)}
        t0 = math.pi / (2 * f0)
        sol = R.closed_form_solution("X2+a10X10+z2Z2", params, p.get("constants"),
                                     span=(0.0, t0 + T_end + 1.0))
        rows = FV.cross_validate(sol, t0, T_end, g, f0, ns=p.get("convergence") or (100, 200, 400), cfg=scheme)
        out.write_json("cross_validation.json", rows)
        for r in rows:
            print(f"n={r['n_cells']:5d}  dx={r['dx']:.4g}  L1 {r['l1_error']:.6e}  Linf {r['linf_error']:.6e}")
        return OK
    if init == "galilean":
        n = int(p.get("n", 200))
        rows = [FV.galilean_test(f, n_cells=n, g=g, cfg=scheme) for f in (0.0, f0 or 1.0)]
        for r in rows:
            print(f"f0={r.f0:g}: discrepancy {r.discrepancy:.4e}, band {r.band:.4e}, "
                  f"{'within' if r.within_band else 'outside'} band")
        out.write_json("galilean.json", [r.__dict__ | {"within_band": r.within_band} for r in rows])
        return OK
    if init == "constant":
        n = int(p.get("n", 100))
        state = FV.from_primitives({"h": 1.0, "u": 0.0, "v": 0.0, "a": 0.5, "b": 0.2}, n, 1.0)
        res = FV.run_until(state, T_end, g, f0, scheme)
        out.write("snapshot_constant.csv", res.state.to_csv(out.header()))
        print(f"constant state after {res.steps} steps: max change {np.abs(res.state.q - state.q).max():.3e}")
        return OK
    raise UsageError(f"unknown --init {init!r}")


# f0 = 1 hides misprints that drop a factor of f0, so the default report adds a generic point
REPORT_POINTS = ({"g": 1.0, "f0": 1.0}, {"g": 1.3, "f0": 0.8})


def cmd_report(cfg: RunConfig, out: Output) -> int:
    user = {**_physics(cfg), **cfg.params.get("params", {})}
    points = [user] if user else list(REPORT_POINTS)
    consts = cfg.params.get("constants", {})
    lines = ["| case | g | f0 | status | printed max residual | corrected max residual |",
             "|---|---|---|---|---|---|"]
    disc, shifts = [], []
    for params in points:
        rows = R.discrepancy_report(params, consts, seed=cfg.seed)
        disc += rows
        for row in rows:
            lines.append(f"| {row['case']} | {row['params']['g']:g} | {row['params']['f0']:g} | {row['status']} | "
                         f"{row['printed_max_residual']:.3e} | {row['corrected_max_residual']:.3e} |")
        shifts.append({"params": params, "pi/2": R.phase_shift_gap(math.pi / 2, params, consts),
                       "pi/4": R.phase_shift_gap(math.pi / 4, params, consts)})
    lines.append("")
    for sh in shifts:
        lines.append(f"Z2 to Z3 by a phase shift at {json.dumps(sh['params'], sort_keys=True)}: "
                     f"gap {sh['pi/2']:.3e} at pi/2, {sh['pi/4']:.3e} at pi/4")
    text = "\n".join(lines) + "\n"
    print(text, end="")
    out.write_text("discrepancies.md", text, comment="<!-- ")
    out.write_json("discrepancies.json", {"closed_forms": disc, "phase_shift_gap": shifts})
    bad = any(r["status"] == "both forms fail" for r in disc)
    return MISMATCH if bad else OK


# ---------------------------------------------------------------------------
# argument handling

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with RunConfig fields")
    common.add_argument("--out", dest="output_dir", help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--trials", type=int)
    common.add_argument("--tol", type=float)
    common.add_argument("--g", type=float)
    common.add_argument("--f0", type=float)

    parser = _Parser(prog="swmhd-lie", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("tables", parents=[common], help="structure and adjoint tables")
    p.add_argument("--case", choices=sorted(S.CASES))

    p = sub.add_parser("verify", parents=[common], help="check the generators of a case")
    p.add_argument("--case", choices=sorted(S.CASES))
    p.add_argument("--include", action="append", default=[], help="extra generator to probe")

    p = sub.add_parser("optimal", parents=[common], help="optimal-system branch of an element")
    for name in L.GENERIC_NAMES:
        p.add_argument(f"--{name}", type=float, default=0.0)

    p = sub.add_parser("reduce", parents=[common], help="reduced system of a similarity reduction")
    p.add_argument("--case", choices=list(R.CATALOG))
    p.add_argument("--param", action="append", help="reduction parameter, key=value")
    p.add_argument("--const", action="append", help="integration constant, key=value")

    p = sub.add_parser("integrate", parents=[common], help="integrate a reduced ODE to CSV")
    p.add_argument("--case", choices=sorted(R.COMPACT_ODES))
    p.add_argument("--param", action="append")
    p.add_argument("--const", action="append")
    p.add_argument("--initial", help="comma-separated initial state")
    p.add_argument("--span", help="start,end of the similarity variable")
    p.add_argument("--points", type=int)
    p.add_argument("--rtol", type=float)
    p.add_argument("--atol", type=float)

    p = sub.add_parser("simulate", parents=[common], help="finite-volume runs")
    p.add_argument("--init", choices=("X2-closed-form", "X2+a10X10+z2Z2", "galilean", "constant"))
    p.add_argument("--convergence", help="comma-separated cell counts")
    p.add_argument("--T", type=float, help="simulated time")
    p.add_argument("--n", type=int, help="cell count")
    p.add_argument("--cfl", type=float)

    p = sub.add_parser("report", parents=[common], help="printed vs corrected closed forms")
    p.add_argument("--param", action="append")
    p.add_argument("--const", action="append")
    return parser


def _config_from_args(args) -> RunConfig:
    base = RunConfig.load(args.config) if args.config else RunConfig()
    extra = {}
    if getattr(args, "param", None):
        extra["params"] = {**base.params.get("params", {}), **_key_values(args.param)}
    if getattr(args, "const", None):
        extra["constants"] = {**base.params.get("constants", {}), **_key_values(args.const)}
    for key in ("initial", "span", "convergence"):
        val = getattr(args, key, None)
        if val is not None:
            nums = _floats(val)
            extra[key] = [int(x) for x in nums] if key == "convergence" else nums
    for key in ("points", "rtol", "atol", "init", "T", "n", "cfl"):
        val = getattr(args, key, None)
        if val is not None:
            extra[key] = val
    return base.merged(case=getattr(args, "case", None), g=args.g, f0=args.f0, seed=args.seed,
                       trials=args.trials, tol=args.tol, output_dir=args.output_dir, params=extra)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
        out = Output(cfg, args.command)
        if args.command == "tables":
            return cmd_tables(cfg, out)
        if args.command == "verify":
            return cmd_verify(cfg, out, args.include)
        if args.command == "optimal":
            return cmd_optimal(cfg, out, {n: getattr(args, n) for n in L.GENERIC_NAMES})
        if args.command == "reduce":
            return cmd_reduce(cfg, out)
        if args.command == "integrate":
            return cmd_integrate(cfg, out)
        if args.command == "simulate":
            return cmd_simulate(cfg, out)
        if args.command == "report":
            return cmd_report(cfg, out)
    except (UsageError, ConfigError, R.ParameterError, KeyError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return IO_ERROR
    except (R.WallError, FV.PositivityError, FV.CFLError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return NUMERICAL
    return IO_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
