"""Expected-table documents and cell-by-cell comparison against recomputation.

A document is UTF-8 text with one cell per line, ``row<TAB>col<TAB>cell``.
Header lines ``#kind:``, ``#case:`` and ``#basis:`` describe the table;
``#typo:<TAB>row<TAB>col<TAB>corrected<TAB>note`` marks a suspected misprint.
Cells are ASCII expressions in the basis names, ``eps``, ``f0``, ``exp``,
``sin`` and ``cos``, e.g. ``exp(eps)*X1`` or ``X3-eps*X1``.
"""

from __future__ import annotations

import ast
import json
import math
import re
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from .liealg import BasisAlgebra, adjoint_action

_SUPERSCRIPT = re.compile(r"\b([XYZ])\^(\d+)")
_FUNCS = {"exp": math.exp, "sin": math.sin, "cos": math.cos}


class CellError(ValueError):
    pass


@dataclass
class Typo:
    row: str
    col: str
    corrected: str
    note: str = ""


@dataclass
class TableDocument:
    kind: str  # "commutator" or "adjoint"
    case: str
    basis: tuple
    cells: dict = field(default_factory=dict)  # (row, col) -> str
    typos: dict = field(default_factory=dict)  # (row, col) -> Typo


def parse_document(text: str) -> TableDocument:
    doc = TableDocument("", "", ())
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip("\r")
        if not line.strip():
            continue
        if line.startswith("#typo:"):
            parts = line.split("\t")[1:]
            if len(parts) < 3:
                raise ValueError(f"line {lineno}: typo annotation needs row, col, corrected")
            t = Typo(parts[0], parts[1], parts[2], parts[3] if len(parts) > 3 else "")
            doc.typos[t.row, t.col] = t
        elif line.startswith("#"):
            key, _, value = line[1:].partition(":")
            key, value = key.strip(), value.strip()
            if key == "kind":
                doc.kind = value
            elif key == "case":
                doc.case = value
            elif key == "basis":
                doc.basis = tuple(value.split())
        else:
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"line {lineno}: expected row<TAB>col<TAB>cell")
            doc.cells[parts[0], parts[1]] = parts[2].strip()
    return doc


def load_document(path) -> TableDocument:
    return parse_document(Path(path).read_text(encoding="utf-8"))


def shipped_document(kind: str, case: str) -> TableDocument:
    """Expected table bundled with the package, e.g. ("adjoint", "coriolis")."""
    stem = "commutators" if kind == "commutator" else "adjoint"
    ref = resources.files("swmhd_lie") / "data" / f"{stem}_{case}.tsv"
    return parse_document(ref.read_text(encoding="utf-8"))


def normalize_cell(cell: str) -> str:
    return _SUPERSCRIPT.sub(r"\1\2", cell.strip())


def evaluate_cell(cell: str, basis, eps: float = 0.0, f0: float = 1.0) -> np.ndarray:
    """Coordinate vector of a cell expression at given parameter values."""
    src = normalize_cell(cell)
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as err:
        raise CellError(f"cannot parse {cell!r}") from err
    n = len(basis)
    index = {name: i for i, name in enumerate(basis)}

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name):
            if node.id in index:
                v = np.zeros(n)
                v[index[node.id]] = 1.0
                return v
            if node.id == "eps":
                return float(eps)
            if node.id == "f0":
                return float(f0)
            raise CellError(f"unknown name {node.id!r} in {cell!r}")
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp):
            a, b = ev(node.left), ev(node.right)
            if isinstance(node.op, ast.Add):
                return a + b
            if isinstance(node.op, ast.Sub):
                return a - b
            if isinstance(node.op, ast.Mult):
                if isinstance(a, np.ndarray) and isinstance(b, np.ndarray):
                    raise CellError(f"product of two generators in {cell!r}")
                return a * b
            if isinstance(node.op, ast.Div) and not isinstance(b, np.ndarray):
                return a / b
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords):
            arg = ev(node.args[0])
            if isinstance(arg, np.ndarray):
                raise CellError(f"function of a generator in {cell!r}")
            return _FUNCS[node.func.id](arg)
        raise CellError(f"unsupported syntax in {cell!r}")

    out = ev(tree)
    if isinstance(out, np.ndarray):
        return out
    if out == 0:
        return np.zeros(n)
    raise CellError(f"cell {cell!r} is a nonzero scalar")


# ---------------------------------------------------------------------------
# readable forms of computed adjoint coefficients

_RECOGNIZE_EPS = (0.1, 0.7, 0.35, 1.3)


def _eps_candidates(f0: float):
    yield "", lambda e: 1.0
    yield "eps", lambda e: e
    yield "eps^2", lambda e: e * e
    for k in (1, -1, 2, -2, 3, -3, 4, -4):
        label = "exp(eps)" if k == 1 else "exp(-eps)" if k == -1 else f"exp({k}*eps)"
        yield label, (lambda kk: lambda e: math.exp(kk * e))(k)
    yield "cos(f0*eps)", lambda e: math.cos(f0 * e)
    yield "sin(f0*eps)", lambda e: math.sin(f0 * e)


def _coef_str(num: Fraction, with_f0: bool, label: str) -> str:
    factors = (["f0"] if with_f0 else []) + ([label] if label else [])
    if not factors:
        return str(num)
    if num == 1:
        return "*".join(factors)
    if num == -1:
        return "-" + "*".join(factors)
    return f"{num}*" + "*".join(factors)


def _recognize_coefficient(samples: dict, f0: float) -> str | None:
    for label, fn in _eps_candidates(f0):
        base = fn(_RECOGNIZE_EPS[0])
        if abs(base) < 1e-12:
            continue
        found = []
        for with_f0 in (False, True):
            r = samples[_RECOGNIZE_EPS[0]] / base / (f0 if with_f0 else 1.0)
            frac = Fraction(r).limit_denominator(100)
            c = float(frac) * (f0 if with_f0 else 1.0)
            if all(abs(samples[e] - c * fn(e)) <= 1e-10 for e in _RECOGNIZE_EPS):
                found.append((frac.denominator, with_f0, frac))
        if found:
            _, with_f0, frac = min(found)
            return _coef_str(frac, with_f0, label)
    return None


def format_vector(coeffs: dict, basis) -> str:
    """coeffs: index -> coefficient string."""
    parts = []
    for k in sorted(coeffs):
        c = coeffs[k]
        if c == "1":
            parts.append(basis[k])
        elif c == "-1":
            parts.append("-" + basis[k])
        else:
            parts.append(f"{c}*{basis[k]}")
    if not parts:
        return "0"
    out = parts[0]
    for p in parts[1:]:
        out += p if p.startswith("-") else "+" + p
    return out


def describe_adjoint(alg: BasisAlgebra, i: int, j: int, f0: float = 1.3) -> str:
    """Symbolic-looking description of Ad(exp(eps X_i)) X_j, recognized numerically.

    A non-unit f0 keeps factors of f0 distinguishable from pure numbers.
    """
    e_j = np.eye(alg.dim)[j]
    samples = {eps: adjoint_action(i, e_j, eps, alg, f0) for eps in _RECOGNIZE_EPS}
    coeffs = {}
    for k in range(alg.dim):
        per = {eps: float(v[k]) for eps, v in samples.items()}
        if all(abs(x) < 1e-13 for x in per.values()):
            continue
        label = _recognize_coefficient(per, f0)
        if label is None:
            return "; ".join(f"eps={eps}: " + " ".join(f"{x:+.12g}" for x in v) for eps, v in samples.items())
        coeffs[k] = label
    return format_vector(coeffs, alg.names)


# ---------------------------------------------------------------------------
# comparison

MATCH, MISMATCH, ANNOTATED, STALE = "match", "mismatch", "annotated", "stale-annotation"


@dataclass
class CellResult:
    row: str
    col: str
    expected: str
    computed: str
    status: str
    note: str = ""
    max_deviation: float | None = None


@dataclass
class TableReport:
    case: str
    kind: str
    basis: tuple
    cells: list = field(default_factory=list)

    def counts(self) -> dict:
        out = {MATCH: 0, MISMATCH: 0, ANNOTATED: 0, STALE: 0}
        for c in self.cells:
            out[c.status] += 1
        return out

    @property
    def ok(self) -> bool:
        """No unannotated mismatch and no annotation whose correction disagrees."""
        return all(c.status in (MATCH, ANNOTATED) for c in self.cells)

    def to_dict(self) -> dict:
        return {"case": self.case, "kind": self.kind, "basis": list(self.basis),
                "counts": self.counts(), "cells": [asdict(c) for c in self.cells]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    def to_markdown(self, title: str | None = None) -> str:
        marks = {MATCH: "", MISMATCH: " **(mismatch)**", ANNOTATED: " †", STALE: " ‡"}
        grid = {(c.row, c.col): c for c in self.cells}
        rows = [r for r in self.basis if any(k[0] == r for k in grid)]
        cols = [c for c in self.basis if any(k[1] == c for k in grid)]
        head = "[Xi, Xj]" if self.kind == "commutator" else "Ad(exp(eps Xi)) Xj"
        lines = []
        if title:
            lines += [f"### {title}", ""]
        lines.append("| " + head + " | " + " | ".join(cols) + " |")
        lines.append("|" + "---|" * (len(cols) + 1))
        for r in rows:
            cells = []
            for c in cols:
                cell = grid.get((r, c))
                cells.append("" if cell is None else f"`{cell.computed}`{marks[cell.status]}")
            lines.append(f"| **{r}** | " + " | ".join(cells) + " |")
        notes = [c for c in self.cells if c.status != MATCH]
        if notes:
            lines += ["", "† annotated misprint (computed value shown), ‡ annotation no longer needed", ""]
            for c in notes:
                lines.append(f"- ({c.row}, {c.col}) [{c.status}] printed `{c.expected}`, "
                             f"computed `{c.computed}`" + (f": {c.note}" if c.note else ""))
        return "\n".join(lines) + "\n"


def _deviation(cell: str, basis, computed_fn, eps_values, f0_values) -> float:
    worst = 0.0
    for f0 in f0_values:
        for eps in eps_values:
            exp = evaluate_cell(cell, basis, eps, f0)
            worst = max(worst, float(np.abs(exp - computed_fn(eps, f0)).max()))
    return worst


def verify_table(alg: BasisAlgebra, expected: TableDocument, *, eps_values=(0.1, 0.7),
                 f0_values=(1.0,), tol: float = 1e-10) -> TableReport:
    """Cell-by-cell comparison of the recomputed table with an expected document."""
    report = TableReport(expected.case, expected.kind, alg.names)
    if not expected.cells:
        return report
    names = alg.names
    C_cache = {f0: alg.structure_array(f0) for f0 in f0_values}
    for (row, col), cell in expected.cells.items():
        if row not in names or col not in names:
            report.cells.append(CellResult(row, col, cell, "", MISMATCH, "row or column not in the basis"))
            continue
        i, j = names.index(row), names.index(col)
        if expected.kind == "commutator":
            computed = alg.format_bracket(i, j)
            fn = lambda eps, f0, i=i, j=j: C_cache[f0][i, j]
            eps_used = (0.0,)
        else:
            computed = describe_adjoint(alg, i, j)
            e_j = np.eye(alg.dim)[j]
            fn = lambda eps, f0, i=i, e_j=e_j: adjoint_action(i, e_j, eps, alg, f0)
            eps_used = eps_values
        try:
            dev = _deviation(cell, names, fn, eps_used, f0_values)
        except CellError as err:
            dev, parse_note = math.inf, str(err)
        else:
            parse_note = ""
        typo = expected.typos.get((row, col))
        if dev <= tol:
            status = STALE if typo else MATCH
            note = typo.note if typo else ""
        elif typo:
            try:
                fix = _deviation(typo.corrected, names, fn, eps_used, f0_values)
            except CellError:
                fix = math.inf
            status = ANNOTATED if fix <= tol else MISMATCH
            note = typo.note if fix <= tol else f"annotated correction {typo.corrected!r} also disagrees"
        else:
            status, note = MISMATCH, parse_note
        report.cells.append(CellResult(row, col, cell, computed, status, note,
                                       None if math.isinf(dev) else dev))
    return report
