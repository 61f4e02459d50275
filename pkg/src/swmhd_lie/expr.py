"""Small immutable expression trees over the rationals.

Nodes are constants, symbols, sums, products, integer powers, ``sin`` and
``cos``.  Every public constructor returns a tree in canonical form: sums and
products are flattened and sorted, like terms and like factors are merged,
rational constants are folded.  Quotients are represented as products with
negative integer powers; the printer renders them as fractions.

Canonicalization is syntactic only.  Semantic zero-testing of expressions
that are not literally zero goes through :func:`is_zero_probabilistic`.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Callable, Iterable, Mapping, Sequence

__all__ = [
    "Expr", "Const", "Sym", "Sum", "Prod", "Pow", "Sin", "Cos",
    "DomainError", "UnboundSymbol", "ZeroTest",
    "const", "sym", "symbols", "as_expr", "add", "mul", "power", "div",
    "sin", "cos", "canonicalize", "differentiate", "substitute", "evaluate",
    "eval_with_scale", "lambdify", "is_zero_probabilistic", "ZERO", "ONE",
]


class DomainError(ZeroDivisionError):
    """A denominator is zero, symbolically or at an evaluation point."""


class UnboundSymbol(KeyError):
    """Evaluation met a symbol with no value in the assignment."""


class Expr:
    __slots__ = ("_key", "_hash", "_free")

    # ordering rank of the node type inside the canonical total order
    rank = -1

    def __init__(self, key):
        self._key = key
        self._hash = hash(key)
        self._free = None

    # structural identity
    @property
    def key(self):
        return self._key

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = const(other)
        if not isinstance(other, Expr):
            return NotImplemented
        return self._hash == other._hash and self._key == other._key

    def __hash__(self):
        return self._hash

    def __lt__(self, other):
        return self._key < other._key

    @property
    def free_symbols(self) -> frozenset:
        if self._free is None:
            self._free = frozenset().union(*(c.free_symbols for c in self.children()))
        return self._free

    def children(self) -> tuple:
        return ()

    def is_zero(self) -> bool:
        return False

    # arithmetic sugar; foreign operands (e.g. vector fields) get their turn
    def __add__(self, other):
        return add(self, other) if _operand(other) else NotImplemented

    def __radd__(self, other):
        return add(other, self) if _operand(other) else NotImplemented

    def __sub__(self, other):
        return add(self, mul(-1, other)) if _operand(other) else NotImplemented

    def __rsub__(self, other):
        return add(other, mul(-1, self)) if _operand(other) else NotImplemented

    def __mul__(self, other):
        return mul(self, other) if _operand(other) else NotImplemented

    def __rmul__(self, other):
        return mul(other, self) if _operand(other) else NotImplemented

    def __truediv__(self, other):
        return div(self, other) if _operand(other) else NotImplemented

    def __rtruediv__(self, other):
        return div(other, self) if _operand(other) else NotImplemented

    def __neg__(self):
        return mul(-1, self)

    def __pow__(self, n):
        if not isinstance(n, int):
            raise TypeError("only integer exponents are supported")
        return power(self, n)

    def __repr__(self):
        return _fmt(self)

    __str__ = __repr__


class Const(Expr):
    __slots__ = ("value", "fvalue")
    rank = 0

    def __init__(self, value: Fraction):
        super().__init__((0, value))
        self.value = value
        self.fvalue = float(value)
        self._free = frozenset()

    def is_zero(self):
        return self.value == 0


class Sym(Expr):
    __slots__ = ("name",)
    rank = 1

    def __init__(self, name: str):
        super().__init__((1, name))
        self.name = name
        self._free = frozenset((name,))


class Pow(Expr):
    __slots__ = ("base", "exp")
    rank = 2

    def __init__(self, base: Expr, exp: int):
        super().__init__((2, base.key, exp))
        self.base = base
        self.exp = exp

    def children(self):
        return (self.base,)


class Prod(Expr):
    __slots__ = ("factors",)
    rank = 3

    def __init__(self, factors: tuple):
        super().__init__((3, tuple(f.key for f in factors)))
        self.factors = factors

    def children(self):
        return self.factors


class Sum(Expr):
    __slots__ = ("terms",)
    rank = 4

    def __init__(self, terms: tuple):
        super().__init__((4, tuple(t.key for t in terms)))
        self.terms = terms

    def children(self):
        return self.terms


class Sin(Expr):
    __slots__ = ("arg",)
    rank = 5

    def __init__(self, arg: Expr):
        super().__init__((5, arg.key))
        self.arg = arg

    def children(self):
        return (self.arg,)


class Cos(Expr):
    __slots__ = ("arg",)
    rank = 6

    def __init__(self, arg: Expr):
        super().__init__((6, arg.key))
        self.arg = arg

    def children(self):
        return (self.arg,)


# ---------------------------------------------------------------------------
# constructors

def _operand(value) -> bool:
    return isinstance(value, (Expr, int, float, Rational, str))


def _to_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite constant {value!r}")
        # shortest decimal repr keeps 9.81 as 981/100
        return Fraction(repr(value))
    raise TypeError(f"cannot make a constant from {type(value).__name__}")


def const(value) -> Const:
    return Const(_to_fraction(value))


def sym(name: str) -> Sym:
    return Sym(name)


def symbols(names: str) -> tuple:
    return tuple(Sym(n) for n in names.replace(",", " ").split())


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, str):
        return Sym(value)
    return const(value)


ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))


def _split_coeff(term: Expr):
    """Return (rational coefficient, remaining monomial)."""
    if isinstance(term, Const):
        return term.value, ONE
    if isinstance(term, Prod) and isinstance(term.factors[0], Const):
        rest = term.factors[1:]
        return term.factors[0].value, rest[0] if len(rest) == 1 else Prod(rest)
    return Fraction(1), term


def _scaled(coeff: Fraction, mono: Expr) -> Expr:
    if mono is ONE or mono == ONE:
        return Const(coeff)
    if coeff == 1:
        return mono
    rest = mono.factors if isinstance(mono, Prod) else (mono,)
    return Prod((Const(coeff),) + rest)


def add(*terms) -> Expr:
    acc: dict = {}
    order: list = []
    stack = [as_expr(t) for t in terms]
    flat = []
    while stack:
        t = stack.pop()
        if isinstance(t, Sum):
            stack.extend(t.terms)
        else:
            flat.append(t)
    for t in flat:
        c, mono = _split_coeff(t)
        if c == 0:
            continue
        k = mono.key
        if k in acc:
            acc[k][0] += c
        else:
            acc[k] = [c, mono]
            order.append(k)
    out = [_scaled(c, mono) for c, mono in acc.values() if c != 0]
    if not out:
        return ZERO
    if len(out) == 1:
        return out[0]
    out.sort(key=lambda e: e.key)
    return Sum(tuple(out))


def mul(*factors) -> Expr:
    coeff = Fraction(1)
    exps: dict = {}
    bases: dict = {}
    stack = [as_expr(f) for f in factors]
    while stack:
        f = stack.pop()
        if isinstance(f, Const):
            coeff *= f.value
        elif isinstance(f, Prod):
            stack.extend(f.factors)
        else:
            if isinstance(f, Pow):
                b, n = f.base, f.exp
            else:
                b, n = f, 1
            exps[b.key] = exps.get(b.key, 0) + n
            bases[b.key] = b
    if coeff == 0:
        return ZERO
    out = []
    for k, n in exps.items():
        if n == 0:
            continue
        out.append(bases[k] if n == 1 else Pow(bases[k], n))
    if not out:
        return Const(coeff)
    out.sort(key=lambda e: e.key)
    if len(out) == 1:
        if coeff == 1:
            return out[0]
        if isinstance(out[0], Sum):
            # distribute numeric coefficients over sums so like terms meet
            return add(*(mul(Const(coeff), t) for t in out[0].terms))
    if coeff != 1:
        out.insert(0, Const(coeff))
    return Prod(tuple(out))


def power(base, n: int) -> Expr:
    base = as_expr(base)
    if n == 0:
        return ONE
    if n == 1:
        return base
    if isinstance(base, Const):
        if base.value == 0 and n < 0:
            raise DomainError("zero denominator")
        return Const(base.value ** n)
    if isinstance(base, Pow):
        return power(base.base, base.exp * n)
    if isinstance(base, Prod):
        return mul(*(power(f, n) for f in base.factors))
    return Pow(base, n)


def div(num, den) -> Expr:
    return mul(num, power(as_expr(den), -1))


def _negated_arg(arg: Expr):
    """If arg carries a negative leading coefficient return -arg, else None."""
    c, mono = _split_coeff(arg)
    if c < 0:
        return _scaled(-c, mono)
    return None


def sin(arg) -> Expr:
    arg = as_expr(arg)
    if isinstance(arg, Const):
        if arg.value == 0:
            return ZERO
    neg = _negated_arg(arg) if not isinstance(arg, Sum) else None
    if neg is not None:
        return mul(-1, Sin(neg))
    return Sin(arg)


def cos(arg) -> Expr:
    arg = as_expr(arg)
    if isinstance(arg, Const) and arg.value == 0:
        return ONE
    neg = _negated_arg(arg) if not isinstance(arg, Sum) else None
    if neg is not None:
        return Cos(neg)
    return Cos(arg)


def canonicalize(e: Expr) -> Expr:
    """Rebuild ``e`` bottom-up through the canonical constructors."""
    return _rebuild(e, lambda leaf: leaf)


def _rebuild(e: Expr, leaf: Callable[[Expr], Expr], memo=None) -> Expr:
    if memo is None:
        memo = {}
    k = e.key
    if k in memo:
        return memo[k]
    if isinstance(e, (Const, Sym)):
        out = leaf(e)
    elif isinstance(e, Sum):
        out = add(*(_rebuild(t, leaf, memo) for t in e.terms))
    elif isinstance(e, Prod):
        out = mul(*(_rebuild(f, leaf, memo) for f in e.factors))
    elif isinstance(e, Pow):
        out = power(_rebuild(e.base, leaf, memo), e.exp)
    elif isinstance(e, Sin):
        out = sin(_rebuild(e.arg, leaf, memo))
    elif isinstance(e, Cos):
        out = cos(_rebuild(e.arg, leaf, memo))
    else:  # pragma: no cover
        raise TypeError(type(e))
    memo[k] = out
    return out


# ---------------------------------------------------------------------------
# calculus and substitution

def differentiate(e: Expr, s: str) -> Expr:
    """Partial derivative of ``e`` with respect to the symbol named ``s``."""
    return _diff(as_expr(e), s, {})


def _diff(e: Expr, s: str, memo: dict) -> Expr:
    if s not in e.free_symbols:
        return ZERO
    k = e.key
    if k in memo:
        return memo[k]
    if isinstance(e, Sym):
        out = ONE
    elif isinstance(e, Sum):
        out = add(*(_diff(t, s, memo) for t in e.terms))
    elif isinstance(e, Prod):
        parts = []
        fs = e.factors
        for i, f in enumerate(fs):
            df = _diff(f, s, memo)
            if df.is_zero():
                continue
            parts.append(mul(df, *fs[:i], *fs[i + 1:]))
        out = add(*parts)
    elif isinstance(e, Pow):
        out = mul(e.exp, power(e.base, e.exp - 1), _diff(e.base, s, memo))
    elif isinstance(e, Sin):
        out = mul(cos(e.arg), _diff(e.arg, s, memo))
    elif isinstance(e, Cos):
        out = mul(-1, sin(e.arg), _diff(e.arg, s, memo))
    else:  # pragma: no cover
        raise TypeError(type(e))
    memo[k] = out
    return out


def substitute(e: Expr, replacements: Mapping[str, object]) -> Expr:
    """Simultaneous substitution of symbols, followed by re-canonicalization.

    Raises DomainError when the substitution makes a denominator literally 0.
    """
    repl = {k: as_expr(v) for k, v in replacements.items()}
    if not repl or not (e.free_symbols & repl.keys()):
        return e

    def leaf(node):
        if isinstance(node, Sym) and node.name in repl:
            return repl[node.name]
        return node

    return _rebuild(e, leaf)


# ---------------------------------------------------------------------------
# numerics

def evaluate(e: Expr, at: Mapping[str, float]) -> float:
    """IEEE double evaluation; operands are combined in canonical order."""
    return _ev(e, at, {}, None)


def eval_with_scale(e: Expr, at: Mapping[str, float]) -> tuple[float, float]:
    """Value of ``e`` and the largest magnitude met among its subterms."""
    scale = [0.0]
    v = _ev(e, at, {}, scale)
    return v, max(scale[0], abs(v))


def _ev(e: Expr, at, memo, scale) -> float:
    k = e.key
    if k in memo:
        return memo[k]
    if isinstance(e, Const):
        return e.fvalue
    if isinstance(e, Sym):
        try:
            return float(at[e.name])
        except KeyError:
            raise UnboundSymbol(e.name) from None
    if isinstance(e, Sum):
        v = 0.0
        for t in e.terms:
            tv = _ev(t, at, memo, scale)
            v += tv
    elif isinstance(e, Prod):
        v = 1.0
        for f in e.factors:
            v *= _ev(f, at, memo, scale)
    elif isinstance(e, Pow):
        b = _ev(e.base, at, memo, scale)
        if b == 0.0 and e.exp < 0:
            raise DomainError(f"zero denominator {e.base!r}")
        v = b ** e.exp
    elif isinstance(e, Sin):
        v = math.sin(_ev(e.arg, at, memo, scale))
    elif isinstance(e, Cos):
        v = math.cos(_ev(e.arg, at, memo, scale))
    else:  # pragma: no cover
        raise TypeError(type(e))
    if scale is not None:
        a = abs(v)
        if a > scale[0]:
            scale[0] = a
    memo[k] = v
    return v


def _code(e: Expr, memo: dict, lines: list) -> str:
    k = e.key
    if k in memo:
        return memo[k]
    if isinstance(e, Const):
        return repr(e.fvalue)
    if isinstance(e, Sym):
        return memo["__sym__"][e.name]
    if isinstance(e, Sum):
        rhs = " + ".join(f"({_code(t, memo, lines)})" for t in e.terms)
    elif isinstance(e, Prod):
        rhs = " * ".join(f"({_code(f, memo, lines)})" for f in e.factors)
    elif isinstance(e, Pow):
        b = _code(e.base, memo, lines)
        rhs = f"({b}) ** {e.exp}" if e.exp > 0 else f"1.0 / (({b}) ** {-e.exp})"
    elif isinstance(e, Sin):
        rhs = f"_sin({_code(e.arg, memo, lines)})"
    else:
        rhs = f"_cos({_code(e.arg, memo, lines)})"
    name = f"_t{len(lines)}"
    lines.append(f"    {name} = {rhs}")
    memo[k] = name
    return name


def lambdify(exprs: Expr | Sequence[Expr], names: Sequence[str]) -> Callable:
    """Compile expressions into a plain Python function of ``names``.

    A single expression gives a scalar function, a sequence gives a function
    returning a tuple.  Zero denominators surface as ZeroDivisionError.
    """
    single = isinstance(exprs, Expr)
    seq = [exprs] if single else [as_expr(x) for x in exprs]
    missing = set().union(*(x.free_symbols for x in seq)) - set(names)
    if missing:
        raise UnboundSymbol(", ".join(sorted(missing)))
    args = [f"_a{i}" for i in range(len(names))]
    memo: dict = {"__sym__": dict(zip(names, args))}
    lines: list = []
    outs = [_code(x, memo, lines) for x in seq]
    ret = outs[0] if single else "(" + ", ".join(outs) + ("," if len(outs) == 1 else "") + ")"
    src = f"def _f({', '.join(args)}):\n" + "\n".join(lines) + f"\n    return {ret}\n"
    ns = {"_sin": math.sin, "_cos": math.cos}
    exec(compile(src, "<lambdify>", "exec"), ns)
    return ns["_f"]


# ---------------------------------------------------------------------------
# randomized identity testing

SAMPLE_LOW, SAMPLE_HIGH = 0.25, 2.0


def sample_value(rng: random.Random) -> float:
    """Uniform draw from [-2, -0.25] U [0.25, 2]."""
    v = rng.uniform(SAMPLE_LOW, SAMPLE_HIGH)
    return v if rng.random() < 0.5 else -v


@dataclass
class ZeroTest:
    passed: bool
    trials: int
    witness: dict | None = None
    value: float = 0.0
    scale: float = 0.0
    max_ratio: float = 0.0

    def __bool__(self):
        return self.passed


def is_zero_probabilistic(
    e: Expr,
    trials: int = 50,
    tol: float = 1e-9,
    *,
    fixed: Mapping[str, float] | None = None,
    rng: random.Random | None = None,
    seed: int | None = None,
    max_resample: int = 100,
) -> ZeroTest:
    """Randomized test of ``e == 0`` as a function of its free symbols.

    Symbols listed in ``fixed`` keep their value; every other symbol is drawn
    from [-2, -0.25] U [0.25, 2] at each trial.  A point passes when
    ``|value| <= tol * (1 + largest intermediate magnitude)``.
    """
    if trials < 1 or tol <= 0:
        raise ValueError("need trials >= 1 and tol > 0")
    if e.is_zero():
        return ZeroTest(True, trials)
    fixed = dict(fixed or {})
    rng = rng if rng is not None else random.Random(seed)
    names = sorted(e.free_symbols - fixed.keys())
    worst = 0.0
    for _ in range(trials):
        for _attempt in range(max_resample):
            point = dict(fixed)
            for n in names:
                point[n] = sample_value(rng)
            try:
                v, s = eval_with_scale(e, point)
            except (ZeroDivisionError, OverflowError):
                continue
            if math.isfinite(v) and math.isfinite(s):
                break
        else:
            raise DomainError("sampling exhausted: expression singular almost everywhere")
        ratio = abs(v) / (1.0 + s)
        worst = max(worst, ratio)
        if ratio > tol:
            return ZeroTest(False, trials, witness=point, value=v, scale=s, max_ratio=ratio)
    return ZeroTest(True, trials, max_ratio=worst)


# ---------------------------------------------------------------------------
# printing

def _fmt_factor(f: Expr) -> str:
    s = _fmt(f)
    return f"({s})" if isinstance(f, Sum) else s


def _fmt(e: Expr) -> str:
    if isinstance(e, Const):
        v = e.value
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(e, Sym):
        return e.name
    if isinstance(e, Sin):
        return f"sin({_fmt(e.arg)})"
    if isinstance(e, Cos):
        return f"cos({_fmt(e.arg)})"
    if isinstance(e, Pow):
        if e.exp < 0:
            return f"1/{_fmt_factor(e.base)}" + (f"^{-e.exp}" if e.exp != -1 else "")
        return f"{_fmt_factor(e.base)}^{e.exp}"
    if isinstance(e, Prod):
        c = Fraction(1)
        num, den = [], []
        for f in e.factors:
            if isinstance(f, Const):
                c = f.value
            elif isinstance(f, Pow) and f.exp < 0:
                den.append(f.base if f.exp == -1 else Pow(f.base, -f.exp))
            else:
                num.append(f)
        sign = "-" if c < 0 else ""
        c = abs(c)
        top = [_fmt_factor(f) for f in num]
        if c.numerator != 1 or not top:
            top.insert(0, str(c.numerator))
        s = sign + "*".join(top)
        bottom = [_fmt_factor(f) for f in den]
        if c.denominator != 1:
            bottom.insert(0, str(c.denominator))
        if bottom:
            s += "/" + (bottom[0] if len(bottom) == 1 else "(" + "*".join(bottom) + ")")
        return s
    if isinstance(e, Sum):
        out = ""
        for i, t in enumerate(e.terms):
            s = _fmt(t)
            if i == 0:
                out = s
            elif s.startswith("-"):
                out += " - " + s[1:]
            else:
                out += " + " + s
        return out
    return object.__repr__(e)  # pragma: no cover
