"""The 1D rotating shallow-water MHD system, its symmetry generators and flows.

Residuals (jet coordinates, fully expanded)::

    H1 = h_t + (h u)_x
    H2 = (h u)_t + (h u^2 + g h^2 / 2 - h a^2)_x + f0 h v
    H3 = (h v)_t + (h u v - h a b)_x - f0 h u
    H4 = (h a)_t + u (h a)_x
    H5 = (h b)_t + (h (u b - v a))_x + v (h a)_x

The rotation rate of the frame is Omega = -f0 / 2.
"""

from __future__ import annotations

import math
import random
import zlib
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Callable, Mapping

from . import expr as E
from .expr import Expr
from .jet import BASE, DEPENDENT, JET, VectorField, dsym, prolong_first, total_derivative

T, X, H, U, V, A, B = (E.sym(n) for n in BASE)


def _param(value, name: str) -> Expr:
    if value is None:
        return E.sym(name)
    return E.as_expr(value)


@dataclass(frozen=True)
class PDESystem:
    g: Expr
    f0: Expr
    residuals: tuple
    evolution: dict  # "h_t" -> Expr in base coordinates and x-derivatives

    def numeric_params(self) -> dict:
        out = {}
        for name, val in (("g", self.g), ("f0", self.f0)):
            if isinstance(val, E.Const):
                out[name] = val.fvalue
        return out

    def on_shell(self, e: Expr) -> Expr:
        """Eliminate every t-derivative through the evolution map."""
        return E.substitute(e, self.evolution)


def build_system(g=None, f0=None) -> PDESystem:
    """Residuals for given (g, f0); ``None`` keeps a parameter symbolic."""
    g, f0 = _param(g, "g"), _param(f0, "f0")
    Dt = lambda e: total_derivative(e, "t")
    Dx = lambda e: total_derivative(e, "x")
    half = E.const(Fraction(1, 2))
    res = (
        Dt(H) + Dx(H * U),
        Dt(H * U) + Dx(H * U**2 + half * g * H**2 - H * A**2) + f0 * H * V,
        Dt(H * V) + Dx(H * U * V - H * A * B) - f0 * H * U,
        Dt(H * A) + U * Dx(H * A),
        Dt(H * B) + Dx(H * (U * B - V * A)) + V * Dx(H * A),
    )
    evolution: dict = {}
    # each residual is linear in its own t-derivative once earlier ones are eliminated
    for r, dep in zip(res, DEPENDENT):
        name = dsym(dep, "t")
        r = E.substitute(r, evolution)
        coef = E.differentiate(r, name)
        rest = E.substitute(r, {name: 0})
        evolution[name] = E.mul(-1, rest, E.power(coef, -1))
    return PDESystem(g, f0, res, evolution)


# ---------------------------------------------------------------------------
# generator catalog

def _vf(name, **parts) -> VectorField:
    return VectorField.from_components(name, **parts)


def base_generators(f0=None) -> dict:
    """Every named generator that appears in the symmetry classification."""
    f0 = _param(f0, "f0")
    s, c = E.sin(f0 * T), E.cos(f0 * T)
    gens = {
        "X1": _vf("X1", t=1),
        "X2": _vf("X2", x=1),
        "X3": _vf("X3", t=T, x=X),
        "X4": _vf("X4", h=H),
        "X5": _vf("X5", x=T, u=1),
        "X6": _vf("X6", v=1),
        "X7": _vf("X7", v=U, b=A),
        "X8": _vf("X8", v=V, b=B),
        "X9": _vf("X9", t=T, u=-U, a=-A),
        "X10": _vf("X10", b=E.div(1, A * H)),
        "Y": _vf("Y", t=T, h=-2 * H, u=-U, a=-A),
        "Z1": _vf("Z1", x=X, u=U, v=V, a=A, b=B),
        "Z2": _vf("Z2", x=s, u=f0 * c, v=f0 * s),
        "Z3": _vf("Z3", x=c, u=-f0 * s, v=f0 * c),
    }
    # with g != 0 the x-scaling must also scale h by the square of the factor
    gens["Z1g"] = _vf("Z1", x=X, h=2 * H, u=U, v=V, a=A, b=B)
    return gens


@dataclass(frozen=True)
class SymmetryCase:
    case_id: str
    g: float
    f0: float
    names: tuple  # catalog keys, in basis order
    algebra_label: str
    controls: tuple = ()

    @property
    def display_names(self) -> tuple:
        return tuple("Z1" if n == "Z1g" else n for n in self.names)


CASES = {
    "free": SymmetryCase(
        "free", 0.0, 0.0,
        ("X1", "X2", "X3", "X4", "X5", "X6", "X7", "X8", "X9", "X10"),
        "{A_{3,3} ⋊ A_{2,1}} ⊗_s A^a_{5,34}",
        controls=(),
    ),
    "gravity": SymmetryCase(
        "gravity", 1.0, 0.0,
        ("X1", "X2", "X3", "X5", "X6", "X8", "X10", "Y"),
        "A_{2,1} ⋊ A_{6,22}",
        controls=("X4", "X9", "X7"),
    ),
    "coriolis": SymmetryCase(
        "coriolis", 0.0, 1.0,
        ("X1", "X2", "X4", "X10", "Z1", "Z2", "Z3"),
        "A_{3,5} ⋊ {A_{2,1} ⋊ A_{2,1}}",
        controls=("X5", "X3", "X9"),
    ),
    "full": SymmetryCase(
        "full", 1.0, 1.0,
        ("X1", "X2", "X10", "Z1g", "Z2", "Z3"),
        "A_{3,5} ⋊ A_{3,3}",
        controls=("X5", "X3", "X4", "Z1"),
    ),
}


def get_case(case_id: str) -> SymmetryCase:
    try:
        return CASES[case_id]
    except KeyError:
        raise ValueError(f"unknown case {case_id!r}; expected one of {sorted(CASES)}") from None


def generators(case_id: str, f0=None) -> list[VectorField]:
    """The named basis of the case's algebra.  ``f0=None`` keeps it symbolic."""
    case = get_case(case_id)
    gens = base_generators(f0)
    return [gens[n].named(d) for n, d in zip(case.names, case.display_names)]


def lookup_generator(name: str, case_id: str = "full", f0=None) -> VectorField:
    """Resolve a generator label in the context of a case.

    Inside the case basis labels take their case meaning (``Z1`` in the full
    case is the h-scaling form).  Anything else comes from the global catalog,
    where ``Z1`` is always the pure x/u/v/a/b scaling.
    """
    case = get_case(case_id)
    gens = base_generators(f0)
    if name in case.display_names:
        key = case.names[case.display_names.index(name)]
        return gens[key].named(name)
    if name in gens:
        return gens[name]
    raise KeyError(f"unknown generator {name!r}")


def control_generators(case_id: str, f0=None) -> list[VectorField]:
    """Negative controls of a case, in their global catalog meaning.

    A control sharing a label with a basis element (the printed ``Z1`` of the
    full case) is renamed ``<label>_printed``.
    """
    case = get_case(case_id)
    gens = base_generators(f0)
    return [gens[n].named(f"{n}_printed" if n in case.display_names else n) for n in case.controls]


# ---------------------------------------------------------------------------
# symmetry verification

@dataclass
class SymmetryCheck:
    name: str
    passed: bool
    tests: list = field(default_factory=list)  # ZeroTest per residual
    witness: dict | None = None
    failed_residual: int | None = None

    def __bool__(self):
        return self.passed


def name_seed(name: str, seed: int) -> int:
    """Independent, reproducible random stream per generator name."""
    return (zlib.crc32(name.encode()) ^ (seed * 0x9E3779B1)) & 0xFFFFFFFF


def symmetry_condition(X: VectorField, sys: PDESystem) -> list[Expr]:
    """X^[1](H_k) with every t-derivative eliminated (the condition mod H = 0)."""
    pr = prolong_first(X)
    return [sys.on_shell(pr.apply(r)) for r in sys.residuals]


def verify_symmetry(X: VectorField, sys: PDESystem, trials: int = 50, tol: float = 1e-9,
                    seed: int = 0) -> SymmetryCheck:
    rng = random.Random(name_seed(X.name or repr(X), seed))
    out = SymmetryCheck(X.name or "?", True)
    for k, cond in enumerate(symmetry_condition(X, sys)):
        zt = E.is_zero_probabilistic(cond, trials, tol, rng=rng)
        out.tests.append(zt)
        if not zt and out.passed:
            out.passed = False
            out.witness = zt.witness
            out.failed_residual = k + 1
    return out


# ---------------------------------------------------------------------------
# one-parameter groups

@dataclass(frozen=True)
class PointMap:
    """A point transformation of (t, x, h, u, v, a, b) given by expressions."""

    name: str
    eps: float
    exprs: dict  # base coordinate -> Expr in base coordinates

    def __call__(self, point: Mapping[str, float]) -> dict:
        env = {k: float(point[k]) for k in BASE}
        return {k: E.evaluate(self.exprs[k], env) for k in BASE}


def _flow_exprs(name: str, eps: float, f0: Expr, case_id: str) -> dict:
    e = E.const(eps)
    grow, shrink = E.const(math.exp(eps)), E.const(math.exp(-eps))
    m = {k: E.sym(k) for k in BASE}
    s, c = E.sin(f0 * T), E.cos(f0 * T)
    key = name
    if name == "Z1" and case_id in ("full", "gravity"):
        key = "Z1g"
    if key == "X1":
        m["t"] = T + e
    elif key == "X2":
        m["x"] = X + e
    elif key == "X3":
        m["t"], m["x"] = grow * T, grow * X
    elif key == "X4":
        m["h"] = grow * H
    elif key == "X5":
        m["x"], m["u"] = X + e * T, U + e
    elif key == "X6":
        m["v"] = V + e
    elif key == "X7":
        m["v"], m["b"] = V + e * U, B + e * A
    elif key == "X8":
        m["v"], m["b"] = grow * V, grow * B
    elif key == "X9":
        m["t"], m["u"], m["a"] = grow * T, shrink * U, shrink * A
    elif key == "X10":
        m["b"] = B + e * E.div(1, A * H)
    elif key == "Y":
        m["t"], m["u"], m["a"] = grow * T, shrink * U, shrink * A
        m["h"] = E.const(math.exp(-2 * eps)) * H
    elif key == "Z1":
        for k in ("x", "u", "v", "a", "b"):
            m[k] = grow * E.sym(k)
    elif key == "Z1g":
        for k in ("x", "u", "v", "a", "b"):
            m[k] = grow * E.sym(k)
        m["h"] = E.const(math.exp(2 * eps)) * H
    elif key == "Z2":
        m["x"], m["u"], m["v"] = X + e * s, U + e * f0 * c, V + e * f0 * s
    elif key == "Z3":
        m["x"], m["u"], m["v"] = X + e * c, U - e * f0 * s, V + e * f0 * c
    # maps as printed next to the generator list, kept for the discrepancy report
    elif key == "X5_printed":
        m["t"], m["u"] = grow * T, grow * U
    elif key == "X10_printed":
        m["b"] = B + e * A * H
    else:
        raise KeyError(f"no finite transformation cataloged for {name!r}")
    return m


TRANSFORMATION_NAMES = ("X1", "X2", "X3", "X4", "X5", "X6", "X7", "X8", "X9", "X10",
                        "Y", "Z1", "Z2", "Z3")
PRINTED_VARIANTS = {"X5": "X5_printed", "X10": "X10_printed"}


def finite_transformation(name: str, eps: float, *, f0=1.0, case_id: str = "coriolis") -> PointMap:
    """Closed-form one-parameter group of a cataloged generator.

    ``case_id`` only matters for ``Z1``, whose form depends on whether g = 0.
    """
    return PointMap(name, eps, _flow_exprs(name, float(eps), _param(f0, "f0"), case_id))


def flow_velocity(name: str, point: Mapping[str, float], *, f0=1.0, case_id="coriolis",
                  step: float = 1e-4) -> dict:
    """Central-difference d/d(eps) of the flow at eps = 0."""
    plus = finite_transformation(name, step, f0=f0, case_id=case_id)(point)
    minus = finite_transformation(name, -step, f0=f0, case_id=case_id)(point)
    return {k: (plus[k] - minus[k]) / (2 * step) for k in BASE}


def flow_consistency(name: str, generator: VectorField, points, *, f0=1.0,
                     case_id="coriolis", step: float = 1e-4) -> float:
    """Largest |d/deps flow - generator coefficient| over the given points."""
    gen = generator.substitute({"f0": f0})
    worst = 0.0
    for p in points:
        vel = flow_velocity(name, p, f0=f0, case_id=case_id, step=step)
        for k, c in gen.items():
            worst = max(worst, abs(vel[k] - E.evaluate(c, p)))
    return worst


def transform_fields(fields: Mapping[str, Expr], name: str, eps: float, *, f0=1.0,
                     case_id: str = "full") -> dict:
    """Image of a solution (fields of t, x) under the finite transformation.

    Returns new fields of (t, x): evaluate the old solution at the preimage
    of (t, x) and map its values forward.
    """
    fwd = finite_transformation(name, eps, f0=f0, case_id=case_id).exprs
    back = finite_transformation(name, -eps, f0=f0, case_id=case_id).exprs
    pre = {"t": back["t"], "x": back["x"]}
    if (pre["t"].free_symbols | pre["x"].free_symbols) - {"t", "x", "f0"}:
        raise ValueError(f"{name}: independent variables mix with dependent ones")
    old = {k: E.substitute(fields[k], pre) for k in DEPENDENT}
    point = {"t": pre["t"], "x": pre["x"], **old}
    return {k: E.substitute(fwd[k], point) for k in DEPENDENT}
