import math
import random

import pytest
from hypothesis import given, strategies as st

from swmhd_lie import expr as E
from swmhd_lie import swmhd as S
from swmhd_lie.jet import BASE


def test_residuals_vanish_on_shell_symbolically():
    sys = S.build_system()
    assert sys.numeric_params() == {}
    for r in sys.residuals:
        assert E.is_zero_probabilistic(sys.on_shell(r), seed=0)


def test_numeric_parameters():
    sys = S.build_system(1.0, 0.5)
    assert sys.numeric_params() == {"g": 1.0, "f0": 0.5}
    assert set(sys.evolution) == {"h_t", "u_t", "v_t", "a_t", "b_t"}


def test_evolution_is_triangular():
    sys = S.build_system()
    # h_t only needs x-derivatives of h and u
    assert sys.evolution["h_t"].free_symbols <= {"h", "u", "h_x", "u_x"}


@pytest.mark.parametrize("case_id", sorted(S.CASES))
def test_case_basis_passes(case_id):
    case = S.get_case(case_id)
    sys = S.build_system(case.g, case.f0)
    for X in S.generators(case_id, case.f0):
        assert S.verify_symmetry(X, sys), X.name


@pytest.mark.parametrize("case_id", sorted(S.CASES))
def test_case_controls_fail_with_witness(case_id):
    case = S.get_case(case_id)
    sys = S.build_system(case.g, case.f0)
    controls = S.control_generators(case_id, case.f0)
    assert len(controls) == len(case.controls)
    for X in controls:
        chk = S.verify_symmetry(X, sys)
        assert not chk.passed, X.name
        assert chk.witness and chk.failed_residual in range(1, 6)


def test_printed_x_scaling_is_not_a_symmetry_with_gravity():
    sys = S.build_system(1.0, 1.0)
    assert not S.verify_symmetry(S.base_generators(1.0)["Z1"], sys)
    assert S.verify_symmetry(S.base_generators(1.0)["Z1g"], sys)


def test_translations_hold_for_symbolic_parameters():
    sys = S.build_system()
    for name in ("X1", "X2", "X10", "Z2", "Z3"):
        assert S.verify_symmetry(S.base_generators()[name], sys), name


def test_verification_is_order_independent():
    sys = S.build_system(0.0, 1.0)
    X = S.base_generators(1.0)["X5"]
    a = S.verify_symmetry(X, sys, seed=4)
    S.verify_symmetry(S.base_generators(1.0)["X1"], sys, seed=4)
    b = S.verify_symmetry(X, sys, seed=4)
    assert a.witness == b.witness


def test_unknown_case():
    with pytest.raises(ValueError):
        S.get_case("nope")
    with pytest.raises(KeyError):
        S.lookup_generator("Q7")


def _points(n, seed):
    rng = random.Random(seed)
    return [{k: E.sample_value(rng) for k in BASE} for _ in range(n)]


@pytest.mark.parametrize("name", S.TRANSFORMATION_NAMES)
def test_flow_matches_generator(name):
    case_id = "full" if name == "Z1" else "coriolis"
    X = S.lookup_generator(name, case_id, 1.0)
    assert S.flow_consistency(name, X, _points(20, 0), f0=1.0, case_id=case_id) < 1e-6


@pytest.mark.parametrize("name,variant", sorted(S.PRINTED_VARIANTS.items()))
def test_printed_finite_maps_do_not_integrate_their_generator(name, variant):
    X = S.base_generators(1.0)[name]
    assert S.flow_consistency(variant, X, _points(20, 0), f0=1.0) > 1e-2


def test_translation_example():
    m = S.finite_transformation("X2", 0.5)
    p = dict(zip(BASE, (0.1, 1.0, 2.0, 0.3, 0.4, 0.5, 0.6)))
    assert m(p)["x"] == 1.5
    assert {k: m(p)[k] for k in BASE if k != "x"} == {k: p[k] for k in BASE if k != "x"}


eps = st.floats(-0.8, 0.8)


@given(st.sampled_from(S.TRANSFORMATION_NAMES), eps, eps)
def test_flows_compose_additively(name, e1, e2):
    p = _points(1, 7)[0]
    case_id = "full" if name == "Z1" else "coriolis"
    one = S.finite_transformation(name, e1, case_id=case_id)
    two = S.finite_transformation(name, e2, case_id=case_id)
    both = S.finite_transformation(name, e1 + e2, case_id=case_id)
    lhs, rhs = one(two(p)), both(p)
    for k in BASE:
        assert lhs[k] == pytest.approx(rhs[k], rel=1e-9, abs=1e-9)
