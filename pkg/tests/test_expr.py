import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from swmhd_lie import expr as E

x, y, z = E.symbols("x y z")


def test_canonical_form_merges_like_terms():
    assert x + y == y + x
    assert x + x == 2 * x
    assert x * y * x == E.power(x, 2) * y
    assert (x - x).is_zero()
    assert E.const(0.5) == E.const(Fraction(1, 2))


def test_negative_powers_cancel():
    assert E.div(x * y, y) == x
    assert (x / x) == E.ONE


def test_zero_denominator_is_a_domain_error():
    with pytest.raises(E.DomainError):
        E.div(x, 0)
    with pytest.raises(E.DomainError):
        E.substitute(E.power(x, -1), {"x": 0})


def test_unbound_symbol():
    with pytest.raises(E.UnboundSymbol):
        E.evaluate(x + y, {"x": 1.0})


def test_derivative_of_composite():
    e = E.sin(x**2)
    assert E.differentiate(e, "x") == 2 * x * E.cos(x**2)
    assert E.differentiate(E.cos(x), "x") == -E.sin(x)
    assert E.differentiate(E.power(x, -2), "x") == -2 * E.power(x, -3)
    assert E.differentiate(x * y, "z").is_zero()


def test_substitute_and_evaluate():
    e = E.substitute(x * y + z, {"y": x, "z": 3})
    assert e == x**2 + 3
    assert E.evaluate(e, {"x": 2.0}) == 7.0


def test_lambdify_positional_order():
    f = E.lambdify([x - y, x * y], ("y", "x"))
    assert f(1.0, 3.0) == (2.0, 3.0)
    g = E.lambdify(E.sin(x), ("x",))
    assert g(0.5) == pytest.approx(math.sin(0.5))


def test_zero_test_recognizes_identity():
    e = E.sin(x) ** 2 + E.cos(x) ** 2 - 1
    assert E.is_zero_probabilistic(e, seed=0)


def test_zero_test_reports_witness():
    res = E.is_zero_probabilistic(x - y, seed=1)
    assert not res
    assert set(res.witness) == {"x", "y"}
    assert res.witness["x"] != res.witness["y"]


def test_sample_value_avoids_small_magnitudes():
    rng = random.Random(0)
    vals = [E.sample_value(rng) for _ in range(2000)]
    assert all(0.25 <= abs(v) <= 2 for v in vals)
    assert any(v < 0 for v in vals) and any(v > 0 for v in vals)


def test_fixed_symbols_keep_their_value():
    e = (x - 1) * y
    assert E.is_zero_probabilistic(e, fixed={"x": 1.0}, seed=3)
    assert not E.is_zero_probabilistic(e, fixed={"x": 2.0}, seed=3)


# --- property tests -------------------------------------------------------

leaves = st.one_of(
    st.sampled_from([x, y, z]),
    st.integers(-3, 3).map(E.const),
)


def _extend(children):
    return st.one_of(
        st.tuples(children, children).map(lambda p: p[0] + p[1]),
        st.tuples(children, children).map(lambda p: p[0] * p[1]),
        st.tuples(children, children).map(lambda p: p[0] - p[1]),
        children.map(E.sin),
        children.map(E.cos),
        st.tuples(children, st.integers(0, 3)).map(lambda p: E.power(p[0], p[1])),
        children.map(lambda c: E.div(c, 2 + x * x)),
    )


exprs = st.recursive(leaves, _extend, max_leaves=8)
points = st.fixed_dictionaries({n: st.floats(-1.5, 1.5) for n in "xyz"})


@given(exprs)
def test_canonicalize_is_idempotent(e):
    once = E.canonicalize(e)
    assert E.canonicalize(once) == once
    assert once == e


@given(exprs, exprs)
def test_addition_and_multiplication_commute(a, b):
    assert a + b == b + a
    assert a * b == b * a


@given(exprs, points)
def test_derivative_matches_finite_difference(e, p):
    step = 1e-5
    d = E.evaluate(E.differentiate(e, "x"), p)
    hi = E.evaluate(e, {**p, "x": p["x"] + step})
    lo = E.evaluate(e, {**p, "x": p["x"] - step})
    fd = (hi - lo) / (2 * step)
    assert abs(fd - d) <= 1e-5 * (1 + abs(d))


@given(exprs, points)
def test_lambdify_agrees_with_evaluate(e, p):
    f = E.lambdify(e, ("x", "y", "z"))
    assert f(p["x"], p["y"], p["z"]) == pytest.approx(E.evaluate(e, p), rel=1e-12, abs=1e-12)


@given(exprs)
def test_expression_minus_itself_is_zero(e):
    assert (e - e).is_zero()
