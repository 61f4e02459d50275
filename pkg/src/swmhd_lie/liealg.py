"""Commutators, structure constants, adjoint action and the optimal-system classifier."""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import expr as E
from .expr import Expr
from .jet import BASE, VectorField, linear_combination


class NotInSpan(ValueError):
    """The field is not a constant-coefficient combination of the basis."""


class ClosureError(ValueError):
    """A bracket of two basis fields left the span of the basis."""


def commutator(X: VectorField, Y: VectorField) -> VectorField:
    """[X, Y]^i = X(Y^i) - Y(X^i)."""
    return VectorField(tuple(E.add(X.apply(yc), E.mul(-1, Y.apply(xc)))
                             for xc, yc in zip(X.coeffs, Y.coeffs)))


# ---------------------------------------------------------------------------
# decomposition in a basis

_PARAM_PROBES = (1.0, 0.7, 1.3)


def _sample_matrix(fields, points):
    rows = []
    for p in points:
        for c in range(len(BASE)):
            rows.append([E.evaluate(f.coeffs[c], p) for f in fields])
    return np.array(rows)


def _recognize(values: dict) -> Expr:
    """Turn {f0 value: coefficient} into rational * f0**k, if possible."""
    probes = sorted(values)
    if all(abs(values[p]) < 1e-10 for p in probes):
        return E.ZERO
    for k in (0, 1, -1, 2, -2):
        r = values[probes[0]] / probes[0] ** k
        frac = Fraction(r).limit_denominator(1000)
        if abs(float(frac) - r) > 1e-9 * (1 + abs(r)):
            continue
        if all(abs(values[p] - float(frac) * p**k) <= 1e-9 * (1 + abs(values[p])) for p in probes):
            return E.mul(E.const(frac), E.power(E.sym("f0"), k))
    # not a monomial in f0; keep the numeric value at the first probe
    return E.const(values[probes[0]])


def decompose_in_basis(V: VectorField, basis, *, trials: int = 30, tol: float = 1e-9,
                       seed: int = 0) -> list[tuple[int, Expr]]:
    """Constant coefficients c_k with V = sum_k c_k basis[k], verified symbolically.

    Coefficients may depend on the parameter f0; they are recovered by least
    squares at random base points for a few f0 values and recognized as
    rational multiples of powers of f0.
    """
    rng = random.Random(seed)
    symbolic_f0 = any("f0" in c.free_symbols for f in (V, *basis) for c in f.coeffs)
    probes = _PARAM_PROBES if symbolic_f0 else (1.0,)
    names = [n for n in BASE]
    fitted = {k: {} for k in range(len(basis))}
    for f0 in probes:
        pts = []
        for _ in range(4 + len(basis)):
            p = {n: E.sample_value(rng) for n in names}
            p["f0"] = f0
            pts.append(p)
        try:
            M = _sample_matrix(basis, pts)
            rhs = _sample_matrix([V], pts)[:, 0]
        except ZeroDivisionError:
            raise NotInSpan("singular sample point") from None
        sol, *_ = np.linalg.lstsq(M, rhs, rcond=None)
        for k, c in enumerate(sol):
            fitted[k][f0] = float(c)
    coeffs = [(k, _recognize(fitted[k])) for k in range(len(basis))]
    coeffs = [(k, c) for k, c in coeffs if not c.is_zero()]
    residual = V - linear_combination([(c, basis[k]) for k, c in coeffs])
    for c in residual.coeffs:
        if c.is_zero():
            continue
        zt = E.is_zero_probabilistic(c, trials, tol, rng=rng)
        if not zt:
            raise NotInSpan(f"residual {c} does not vanish (witness {zt.witness})")
    return coeffs


# ---------------------------------------------------------------------------
# the algebra

@dataclass(frozen=True, eq=False)
class BasisAlgebra:
    basis: tuple
    structure: dict  # (i, j) -> list of (k, Expr)
    algebra_label: str = ""
    params: dict = field(default_factory=dict)

    @classmethod
    def from_fields(cls, basis, algebra_label: str = "", params=None, seed: int = 0) -> "BasisAlgebra":
        basis = tuple(basis)
        structure = {}
        n = len(basis)
        for i in range(n):
            structure[i, i] = []
            for j in range(i + 1, n):
                br = commutator(basis[i], basis[j])
                try:
                    c = [] if br.is_zero() else decompose_in_basis(br, basis, seed=seed + 31 * i + j)
                except NotInSpan as err:
                    raise ClosureError(f"[{basis[i].name}, {basis[j].name}] not in span: {err}") from None
                structure[i, j] = c
                structure[j, i] = [(k, E.mul(-1, v)) for k, v in c]
        return cls(basis, structure, algebra_label, dict(params or {}))

    @property
    def names(self) -> tuple:
        return tuple(f.name for f in self.basis)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def bracket_field(self, i: int, j: int) -> VectorField:
        return linear_combination([(c, self.basis[k]) for k, c in self.structure[i, j]])

    def structure_array(self, f0=None) -> np.ndarray:
        """C[i, j, k] with [X_i, X_j] = sum_k C[i, j, k] X_k, at numeric f0."""
        n = self.dim
        C = np.zeros((n, n, n))
        env = {}
        if f0 is not None:
            env["f0"] = float(f0)
        elif "f0" in self.params and self.params["f0"] is not None:
            env["f0"] = float(self.params["f0"])
        for (i, j), entries in self.structure.items():
            for k, c in entries:
                try:
                    C[i, j, k] = E.evaluate(c, env)
                except E.UnboundSymbol:
                    raise ValueError("f0 must be numeric for the adjoint representation") from None
        return C

    def format_bracket(self, i: int, j: int) -> str:
        return format_combination(self.structure[i, j], self.names)


def format_combination(entries, names) -> str:
    if not entries:
        return "0"
    out = []
    for k, c in entries:
        if c == E.ONE:
            term = names[k]
        elif c == E.const(-1):
            term = f"-{names[k]}"
        else:
            s = str(c)
            term = f"({s})*{names[k]}" if any(ch in s for ch in "+- ") and not s.startswith("-") else f"{s}*{names[k]}"
        out.append(term)
    return " + ".join(out).replace("+ -", "- ")


def antisymmetry_violations(alg: BasisAlgebra) -> list:
    bad = []
    for i, j in itertools.combinations(range(alg.dim), 2):
        a = commutator(alg.basis[i], alg.basis[j])
        b = commutator(alg.basis[j], alg.basis[i])
        if not a.structurally_equal(-b):
            bad.append((alg.names[i], alg.names[j]))
    return bad


def jacobi_violations(alg: BasisAlgebra, trials: int = 20, tol: float = 1e-9, seed: int = 0) -> list:
    """Triples whose Jacobi sum of vector fields is not identically zero."""
    rng = random.Random(seed)
    bad = []
    for i, j, k in itertools.combinations(range(alg.dim), 3):
        X, Y, Z = (alg.basis[m] for m in (i, j, k))
        J = (commutator(commutator(X, Y), Z) + commutator(commutator(Y, Z), X)
             + commutator(commutator(Z, X), Y))
        for c in J.coeffs:
            if not c.is_zero() and not E.is_zero_probabilistic(c, trials, tol, rng=rng):
                bad.append((alg.names[i], alg.names[j], alg.names[k]))
                break
    return bad


def structure_jacobi_defect(C: np.ndarray) -> float:
    """max |sum_m (C_ijm C_mkl + C_jkm C_mil + C_kim C_mjl)|."""
    J = (np.einsum("ijm,mkl->ijkl", C, C) + np.einsum("jkm,mil->ijkl", C, C)
         + np.einsum("kim,mjl->ijkl", C, C))
    return float(np.abs(J).max()) if J.size else 0.0


# ---------------------------------------------------------------------------
# adjoint representation

def adjoint_matrix(A_index: int, alg: BasisAlgebra, f0=None) -> np.ndarray:
    """Matrix of ad_A: column j holds the coordinates of [X_A, X_j]."""
    C = alg.structure_array(f0)
    return C[A_index].T.copy()


def expm(M: np.ndarray, tol: float = 1e-16) -> np.ndarray:
    """Matrix exponential by scaling and squaring of a truncated Taylor series."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    norm = np.abs(M).sum(axis=0).max() if n else 0.0
    squarings = max(0, int(math.ceil(math.log2(norm / 0.5)))) if norm > 0.5 else 0
    S = M / (2.0**squarings)
    out = np.eye(n)
    term = np.eye(n)
    for k in range(1, 40):
        term = term @ S / k
        out = out + term
        if not term.any() or np.abs(term).max() <= tol * np.abs(out).max():
            break
    for _ in range(squarings):
        out = out @ out
    return out


def adjoint_action(A_index: int, coeffs, eps: float, alg: BasisAlgebra, f0=None) -> np.ndarray:
    """Coordinates of Ad(exp(eps X_A)) applied to the element with given coordinates."""
    v = np.asarray(coeffs, dtype=float)
    return expm(-eps * adjoint_matrix(A_index, alg, f0)) @ v


def adjoint_series(A_index: int, coeffs, eps: float, alg: BasisAlgebra, f0=None, terms: int = 2) -> np.ndarray:
    """Truncated series B - eps [A, B] + eps^2/2 [A, [A, B]] - ..."""
    M = adjoint_matrix(A_index, alg, f0)
    v = np.asarray(coeffs, dtype=float)
    out = v.copy()
    term = v.copy()
    for k in range(1, terms):
        term = -eps * (M @ term) / k
        out = out + term
    return out


# ---------------------------------------------------------------------------
# optimal system of the six-dimensional algebra

GENERIC_NAMES = ("a1", "a2", "a10", "z1", "z2", "z3")
GENERIC_BASIS = ("X1", "X2", "X10", "Z1", "Z2", "Z3")


@dataclass(frozen=True)
class GenericElement:
    a1: float = 0.0
    a2: float = 0.0
    a10: float = 0.0
    z1: float = 0.0
    z2: float = 0.0
    z3: float = 0.0

    @classmethod
    def from_vector(cls, v) -> "GenericElement":
        return cls(*(float(x) for x in v))

    def vector(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in GENERIC_NAMES])


def _rep(*names):
    return frozenset(names)


# one-dimensional optimal system, in the order it is usually listed
OPTIMAL_SYSTEM = (
    ("X1", _rep("a1")), ("X2", _rep("a2")), ("X3", None), ("X10", _rep("a10")),
    ("Z1", _rep("z1")), ("Z2", _rep("z2")), ("Z3", _rep("z3")),
    ("a1X1+z1Z1", _rep("a1", "z1")),
    ("a1X1+a2X2", _rep("a1", "a2")),
    ("a1X1+a10X10", _rep("a1", "a10")),
    ("a1X1+a2X2+a10X10", _rep("a1", "a2", "a10")),
    ("a2X2+a10X10", _rep("a2", "a10")),
    ("a2X2+z2Z2", _rep("a2", "z2")),
    ("a2X2+z3Z3", _rep("a2", "z3")),
    ("a10X10+z2Z2", _rep("a10", "z2")),
    ("a10X10+z3Z3", _rep("a10", "z3")),
    ("z2Z2+z3Z3", _rep("z2", "z3")),
    ("a2X2+a10X10+z2Z2", _rep("a2", "a10", "z2")),
    ("a2X2+a10X10+z3Z3", _rep("a2", "a10", "z3")),
    ("a10X10+z2Z2+z3Z3", _rep("a10", "z2", "z3")),
    ("a2X2+a10X10+z2Z2+z3Z3", _rep("a2", "a10", "z2", "z3")),
)

BRANCH_FORMS = {
    "I": "a1X1+z1Z1",
    "II": "a1X1+a2X2+a10X10",
    "III": "z1Z1",
    "IV": "a2X2+a10X10+z2Z2+z3Z3",
}
# coefficients a representative of each branch may carry
BRANCH_SUPPORT = {
    "I": _rep("a1", "z1"),
    "II": _rep("a1", "a2", "a10"),
    "III": _rep("z1"),
    "IV": _rep("a2", "a10", "z2", "z3"),
}


@dataclass(frozen=True)
class Classification:
    branch: str
    branch_form: str
    representative: str
    normalized: tuple


def classify_branch(e: GenericElement, zero_tol: float = 1e-12) -> Classification:
    v = e.vector()
    scale = np.abs(v).max()
    if not np.isfinite(scale) or scale == 0:
        raise ValueError("zero element has no branch")
    v = v / scale
    nz = {n for n, c in zip(GENERIC_NAMES, v) if abs(c) > zero_tol}
    a1, z1 = "a1" in nz, "z1" in nz
    branch = {(True, True): "I", (True, False): "II", (False, True): "III", (False, False): "IV"}[a1, z1]
    support = nz & BRANCH_SUPPORT[branch]
    rep = None
    best = None
    for label, sup in OPTIMAL_SYSTEM:
        if sup is None or not sup >= support or not sup <= BRANCH_SUPPORT[branch]:
            continue
        if not ({"a1", "z1"} & sup) == ({"a1", "z1"} & support):
            continue
        if best is None or len(sup) < best:
            rep, best = label, len(sup)
    return Classification(branch, BRANCH_FORMS[branch], rep or BRANCH_FORMS[branch], tuple(v))


# the six constraint operators on phi(a1, a2, a10, z1, z2, z3) as printed
INVARIANCE_CONSTRAINTS = (
    {"a2": "z1"},
    {"a10": "2*z1"},
    {"z3": "z2", "z2": "-z3"},
    {"z3": "f0*a1", "z2": "-z1"},
    {"z2": "f0*a1", "z3": "z1"},
    {"z2": "a2+z2", "a10": "2*a10", "z3": "z3"},
)


def _parse_linear(s: str) -> Expr:
    """Tiny parser for the constraint coefficients above (sums of products)."""
    out = E.ZERO
    for sign, term in _split_terms(s):
        factors = [E.const(int(f)) if f.isdigit() else E.sym(f) for f in term.split("*")]
        out = out + E.mul(sign, *factors)
    return out


def _split_terms(s: str):
    s = s.replace(" ", "")
    terms, cur, sign = [], "", 1
    for ch in s:
        if ch in "+-":
            if cur:
                terms.append((sign, cur))
            cur, sign = "", (1 if ch == "+" else -1)
        else:
            cur += ch
    if cur:
        terms.append((sign, cur))
    return terms


def constraint_operators() -> list[dict]:
    return [{var: _parse_linear(c) for var, c in row.items()} for row in INVARIANCE_CONSTRAINTS]


def structure_constraint_operators(alg: BasisAlgebra) -> list[dict]:
    """Invariance operators generated from the structure constants.

    For each basis A, phi is invariant under Ad(exp(eps A)) iff
    sum_k (sum_j c[A, j, k] e_j) d phi / d e_k = 0.
    """
    e = [E.sym(n) for n in GENERIC_NAMES]
    ops = []
    for A in range(alg.dim):
        op = {}
        for k in range(alg.dim):
            terms = []
            for j in range(alg.dim):
                for kk, c in alg.structure[A, j]:
                    if kk == k:
                        terms.append(E.mul(c, e[j]))
            s = E.add(*terms)
            if not s.is_zero():
                op[GENERIC_NAMES[k]] = s
        ops.append(op)
    return ops


def apply_operator(op: dict, phi: Expr) -> Expr:
    return E.add(*(E.mul(c, E.differentiate(phi, var)) for var, c in op.items()))


@dataclass
class InvarianceReport:
    max_component_drift: float = 0.0
    samples: int = 0
    printed_constraints_ok: dict = field(default_factory=dict)
    structure_constraints_ok: dict = field(default_factory=dict)
    branch_changes: int = 0

    @property
    def passed(self) -> bool:
        return (self.max_component_drift <= 1e-10 and self.branch_changes == 0
                and all(self.printed_constraints_ok.values())
                and all(self.structure_constraints_ok.values()))


def invariance_check(alg: BasisAlgebra, trials: int = 100, f0: float = 1.0, seed: int = 0) -> InvarianceReport:
    """a1 and z1 are unchanged by every adjoint action, and annihilate the constraints."""
    if alg.names != GENERIC_BASIS:
        raise ValueError(f"expected basis {GENERIC_BASIS}, got {alg.names}")
    rng = np.random.default_rng(seed)
    rep = InvarianceReport()
    i1, iz = GENERIC_NAMES.index("a1"), GENERIC_NAMES.index("z1")
    for A in range(alg.dim):
        for _ in range(trials):
            e = rng.uniform(-2, 2, alg.dim)
            eps = rng.uniform(-2, 2)
            out = adjoint_action(A, e, eps, alg, f0)
            drift = max(abs(out[i1] - e[i1]), abs(out[iz] - e[iz]))
            rep.max_component_drift = max(rep.max_component_drift, drift)
            rep.samples += 1
            if classify_branch(GenericElement.from_vector(e)).branch != \
                    classify_branch(GenericElement.from_vector(out)).branch:
                rep.branch_changes += 1
    zrng = random.Random(seed)
    for phi_name in ("a1", "z1"):
        phi = E.sym(phi_name)
        rep.printed_constraints_ok[phi_name] = all(
            E.is_zero_probabilistic(apply_operator(op, phi), 50, 1e-9, rng=zrng)
            for op in constraint_operators())
        rep.structure_constraints_ok[phi_name] = all(
            E.is_zero_probabilistic(apply_operator(op, phi), 50, 1e-9, rng=zrng)
            for op in structure_constraint_operators(alg))
    return rep
