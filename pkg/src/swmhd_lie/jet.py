"""First-order jet space over (t, x; h, u, v, a, b) and point-symmetry generators."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping

from . import expr as E
from .expr import Expr

INDEPENDENT = ("t", "x")
DEPENDENT = ("h", "u", "v", "a", "b")
BASE = INDEPENDENT + DEPENDENT


class JetOrderError(ValueError):
    """Raised when an operation would need second-order jet coordinates."""


def dsym(dep: str, ind: str) -> str:
    """Name of the first-derivative coordinate of ``dep`` along ``ind``."""
    return f"{dep}_{ind}"


@dataclass(frozen=True)
class JetSpace:
    independent: tuple = INDEPENDENT
    dependent: tuple = DEPENDENT

    @property
    def base(self) -> tuple:
        return self.independent + self.dependent

    @property
    def derivatives(self) -> tuple:
        return tuple(dsym(d, i) for d in self.dependent for i in self.independent)

    @property
    def coordinates(self) -> tuple:
        return self.base + self.derivatives

    def is_derivative(self, name: str) -> bool:
        return name in self.derivatives


JET = JetSpace()


@dataclass(frozen=True, eq=False)
class VectorField:
    """X = xi^t d_t + xi^x d_x + eta^h d_h + ... + eta^b d_b."""

    coeffs: tuple  # one Expr per base coordinate, in BASE order
    name: str | None = None

    def __post_init__(self):
        if len(self.coeffs) != len(BASE):
            raise ValueError(f"expected {len(BASE)} coefficients")
        cs = tuple(E.as_expr(c) for c in self.coeffs)
        object.__setattr__(self, "coeffs", cs)
        derivs = set(JET.derivatives)
        for c in cs:
            if c.free_symbols & derivs:
                raise JetOrderError("point symmetries cannot depend on derivatives")

    @classmethod
    def from_components(cls, name: str | None = None, **parts) -> "VectorField":
        """Build from keyword components, e.g. ``VectorField.from_components(t=1)``."""
        unknown = set(parts) - set(BASE)
        if unknown:
            raise ValueError(f"unknown coordinates {sorted(unknown)}")
        return cls(tuple(E.as_expr(parts.get(c, 0)) for c in BASE), name)

    def __getitem__(self, coord: str) -> Expr:
        return self.coeffs[BASE.index(coord)]

    def items(self) -> Iterator[tuple[str, Expr]]:
        return zip(BASE, self.coeffs)

    @property
    def xi(self) -> dict:
        return {i: self[i] for i in INDEPENDENT}

    @property
    def eta(self) -> dict:
        return {d: self[d] for d in DEPENDENT}

    def named(self, name: str) -> "VectorField":
        return VectorField(self.coeffs, name)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coeffs)

    def apply(self, f: Expr) -> Expr:
        """Action of the field as a derivation on a function of base coordinates."""
        return E.add(*(E.mul(c, E.differentiate(f, n)) for n, c in self.items() if not c.is_zero()))

    def substitute(self, repl: Mapping[str, object]) -> "VectorField":
        return VectorField(tuple(E.substitute(c, repl) for c in self.coeffs), self.name)

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(tuple(E.add(a, b) for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: "VectorField") -> "VectorField":
        return self + (-1) * other

    def __rmul__(self, k) -> "VectorField":
        k = E.as_expr(k)
        return VectorField(tuple(E.mul(k, c) for c in self.coeffs))

    def __neg__(self):
        return (-1) * self

    def structurally_equal(self, other: "VectorField") -> bool:
        return self.coeffs == other.coeffs

    def __repr__(self):
        parts = [f"({c})*d_{n}" for n, c in self.items() if not c.is_zero()]
        body = " + ".join(parts) if parts else "0"
        return f"{self.name}: {body}" if self.name else body


def linear_combination(terms) -> VectorField:
    """Sum of ``coefficient * field`` over (coefficient, field) pairs."""
    out = VectorField.from_components()
    for k, f in terms:
        out = out + k * f
    return out


def total_derivative(e: Expr, wrt: str, space: JetSpace = JET) -> Expr:
    """D_wrt e for e depending on base coordinates only (first-order truncation)."""
    if wrt not in space.independent:
        raise ValueError(f"{wrt!r} is not an independent variable")
    if e.free_symbols & set(space.derivatives):
        raise JetOrderError("total derivative of a derivative coordinate needs a second-order jet")
    parts = [E.differentiate(e, wrt)]
    for dep in space.dependent:
        d = E.differentiate(e, dep)
        if not d.is_zero():
            parts.append(E.mul(E.sym(dsym(dep, wrt)), d))
    return E.add(*parts)


@dataclass(frozen=True)
class ProlongedField:
    base: VectorField
    eta1: dict = field(default_factory=dict)  # (dependent, independent) -> Expr

    def apply(self, f: Expr) -> Expr:
        """X^[1] acting on a function of first-order jet coordinates."""
        parts = [self.base.apply(f)]
        for (dep, ind), c in self.eta1.items():
            if c.is_zero():
                continue
            d = E.differentiate(f, dsym(dep, ind))
            if not d.is_zero():
                parts.append(E.mul(c, d))
        return E.add(*parts)


def prolong_first(X: VectorField, space: JetSpace = JET) -> ProlongedField:
    """First prolongation: eta1[A][i] = D_i eta^A - sum_j Psi^A_j D_i xi^j."""
    D = {(c, i): total_derivative(X[c], i, space) for c in space.base for i in space.independent}
    eta1 = {}
    for dep in space.dependent:
        for i in space.independent:
            terms = [D[dep, i]]
            for j in space.independent:
                dxi = D[j, i]
                if not dxi.is_zero():
                    terms.append(E.mul(-1, E.sym(dsym(dep, j)), dxi))
            eta1[dep, i] = E.add(*terms)
    return ProlongedField(X, eta1)
