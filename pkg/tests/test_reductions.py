import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from swmhd_lie import expr as E
from swmhd_lie import reductions as R
from swmhd_lie.swmhd import base_generators, build_system

GENERIC = {"g": 1.3, "f0": 0.8}


@pytest.mark.parametrize("name", list(R.CATALOG))
def test_every_ansatz_is_invariant(name):
    assert R.ansatz_is_invariant(R.get_reduction(name), GENERIC)


def test_printed_mixed_ansatz_is_not_invariant():
    red = R.get_reduction("X2+a10X10+z2Z2")
    assert not R.ansatz_is_invariant(red, None, ansatz=R.PRINTED_ANSATZ[red.name])


def test_cases_needing_rotation_reject_f0_zero():
    with pytest.raises(R.ParameterError):
        R.reduce("Z2", {"f0": 0.0})
    with pytest.raises(R.ParameterError):
        R.reduce("X10+z2Z2", {"z2": 0.0})


def test_uniform_reduction_display():
    red = R.reduce("X2", GENERIC)
    H, U, V, A, B = (E.sym(n) for n in "HUVAB")
    Hs, Us, Vs, As, Bs = (E.sym(n + "_s") for n in "HUVAB")
    f0 = E.const(0.8)
    expected = [Hs, Hs * U + H * Us + f0 * H * V, Hs * V + H * Vs - f0 * H * U, Hs * A + H * As, Hs * B + H * Bs]
    for got, want in zip(red.on_section, expected):
        assert E.is_zero_probabilistic(got - want, seed=0)


def test_scaling_reduction_display():
    # corrected simplified system: A' = 0 and the A^2 coupling in U'
    red = R.reduce("Z1", GENERIC)
    state = [1.1, 0.3, -0.4, 0.7, 0.2]
    rhs = red.rhs(0.5, state)
    want = R.COMPACT_ODES["Z1"].rhs(0.5, state, R._params(GENERIC), {})
    assert np.allclose(rhs, want, atol=1e-12)
    assert abs(rhs[3]) < 1e-14
    assert red.consistency(0.5, state) < 1e-12


@pytest.mark.parametrize("name", sorted(R.COMPACT_ODES))
def test_compact_odes_match_generic_reduction(name):
    consts = {"u0": 1.0, "a0": 2.0}
    assert R.dual_route_defect(name, None, consts) < 1e-8
    assert R.dual_route_defect(name, GENERIC, consts, seed=3) < 1e-8


def test_printed_scaling_system_disagrees():
    assert R.dual_route_defect("Z1", printed=True) > 1e-2


def test_mixed_reduction_rhs_oracle():
    # frozen from an independent symbolic derivation
    p = {"g": 1.3, "f0": 0.8, "z2": 0.5, "a10": 0.7}
    c = {"h0": 1.2, "a0": 0.9}
    dU, dV, dB = R._x2x10z2_rhs(0.3, [0.4, -0.5, 0.2], p, c)
    assert dU == pytest.approx(0.26109496933069322, rel=1e-13)
    assert dV == pytest.approx(0.86934095223748894, rel=1e-13)
    assert dB == pytest.approx(-0.14614619017246873, rel=1e-13)


def test_travelling_wave_matches_printed_first_equation():
    p, c = R._params(None), R._consts({"u0": 1.0, "a0": 2.0})
    v, h = 0.3, 1.2
    dv, _ = R._dd_rhs(0.0, [v, h], p, c)
    # u0 (1 - (a0/u0)^2) v' - f0 (a2 h + u0) = 0
    assert c["u0"] * (1 - (c["a0"] / c["u0"]) ** 2) * dv - p["f0"] * (p["a2"] * h + c["u0"]) == pytest.approx(0)


# --- closed forms ----------------------------------------------------------

def test_uniform_rotation_solution():
    sol = R.closed_form_solution("X2", {"f0": 1.0, "g": 1.0})
    rep = R.residual_check(sol, tol=1e-10)
    assert rep.passed and rep.samples == 100
    f = sol.fields(1.0, 0.0)
    c = R.DEFAULT_CONSTANTS
    assert f["u"] == pytest.approx(c["u0"] * math.cos(1) - c["v0"] * math.sin(1))
    assert f["v"] == pytest.approx(c["u0"] * math.sin(1) + c["v0"] * math.cos(1))


def test_self_similar_constant_solution():
    sol = R.closed_form_solution("X3", {"f0": 0.0, "g": 1.0})
    assert R.residual_check(sol, tol=1e-10).passed
    with pytest.raises(R.ParameterError):
        R.closed_form_solution("X3", {"f0": 1.0})


def test_equilibrium_residual_is_exactly_zero():
    fields = {"h": E.const(1.3), "u": E.ZERO, "v": E.ZERO, "a": E.const(0.7), "b": E.const(0.2)}
    sol = R.ExprSolution("equilibrium", "corrected", R._params(None), fields)
    rep = R.residual_check(sol)
    assert rep.per_equation_max_residual == [0.0] * 5


@pytest.mark.parametrize("params", [{"g": 1.0, "f0": 1.0}, GENERIC])
@pytest.mark.parametrize("name", R.DISCREPANCY_CASES)
def test_corrected_closed_forms_solve_the_system(name, params):
    rep = R.residual_check(R.closed_form_solution(name, params, form="corrected"), tol=1e-8)
    assert rep.passed, rep.per_equation_max_residual
    assert rep.to_dict()["corrected_form_used"] is True


@pytest.mark.parametrize("name", ["Z2", "Z3", "X10+z2Z2", "X10+z3Z3", "X2+a10X10+z2Z2"])
def test_printed_closed_forms_fail_at_generic_parameters(name):
    rep = R.residual_check(R.closed_form_solution(name, GENERIC, form="printed"), tol=1e-8)
    assert not rep.passed


def test_f0_misprint_hides_at_unit_rotation():
    rep = R.residual_check(R.closed_form_solution("X10+z2Z2", {"g": 1.0, "f0": 1.0}, form="printed"))
    assert rep.passed


def test_report_schema():
    d = R.residual_check(R.closed_form_solution("X2")).to_dict()
    assert {"case", "params", "per_equation_max_residual", "status", "corrected_form_used"} <= set(d)


def test_discrepancy_report_lists_deltas():
    rows = R.discrepancy_report(GENERIC, n=20)
    assert [r["case"] for r in rows] == list(R.DISCREPANCY_CASES)
    for r in rows:
        assert r["status"] == "printed form fails; corrected form passes"
        assert max(r["max_field_delta"].values()) > 0


def test_wall_evaluation():
    sol = R.closed_form_solution("Z3", {"f0": 1.0})
    with pytest.raises(R.WallError):
        sol.fields(math.pi / 2, 0.0)
    with pytest.raises(R.WallError):
        R.closed_form_solution("Z2", {"f0": 2.0}).jet(math.pi / 2, 1.0)


def test_phase_shift_maps_one_family_onto_the_other():
    assert R.phase_shift_gap(math.pi / 2) < 1e-10
    assert R.phase_shift_gap(math.pi / 2, GENERIC) < 1e-10
    assert R.phase_shift_gap(math.pi / 4) > 1e-2


# --- invariant-surface condition ------------------------------------------

def _expr_solution(fields, params=None):
    return R.ExprSolution("probe", "corrected", R._params(params), {k: E.as_expr(v) for k, v in fields.items()})


def test_static_fields_are_invariant_under_time_translation():
    x = E.sym("x")
    sol = _expr_solution({"h": 1 + x * x, "u": E.sin(x), "v": x, "a": E.cos(x), "b": 2})
    assert R.invariant_surface_check("X1", sol)


def test_travelling_frame_solution_is_invariant():
    p = R._params(None)
    t, x = E.sym("t"), E.sym("x")
    zeta = x + E.const(p["z2"] / p["f0"]) * E.cos(E.const(p["f0"]) * t)
    fields = {"h": 2 + E.sin(zeta), "a": 1 + zeta * zeta, "b": zeta,
              "u": E.const(p["z2"]) * E.sin(t) + E.cos(zeta), "v": -E.const(p["z2"]) * E.cos(t) + zeta}
    assert R.invariant_surface_check("X2+z2Z2", _expr_solution(fields))


def test_rotating_solution_is_not_static():
    sol = R.closed_form_solution("X2")
    assert not R.invariant_surface_check("X1", sol, generator=base_generators(1.0)["X1"])
    assert R.invariant_surface_check("X2", sol)


@pytest.mark.parametrize("name", ["Z2", "Z3", "X10+z2Z2", "X10+z3Z3"])
def test_closed_forms_are_invariant_under_their_generators(name):
    assert R.invariant_surface_check(name, R.closed_form_solution(name, GENERIC))


def test_mixed_solution_is_invariant():
    sol = R.closed_form_solution("X2+a10X10+z2Z2")
    assert R.invariant_surface_check("X2+a10X10+z2Z2", sol, n=20)


# symmetries map solutions to solutions
FULL_ALGEBRA = ["X1", "X2", "X10", "Z1", "Z2", "Z3"]


@settings(max_examples=25)
@given(st.sampled_from(["X2", "Z2", "Z3", "X10+z2Z2", "X10+z3Z3"]), st.sampled_from(FULL_ALGEBRA),
       st.floats(-0.5, 0.5))
def test_symmetries_map_solutions_to_solutions(name, gen, eps):
    sol = R.closed_form_solution(name, {"g": 1.0, "f0": 1.0})
    image = R.transformed_solution(sol, gen, eps, "full")
    pts = R.sample_points(image, 15, seed=1, t_range=(0.3, 2.8))
    rep = R.residual_check(image, sample=pts, tol=1e-7)
    assert rep.passed, (name, gen, eps, rep.per_equation_max_residual)


def test_non_symmetry_breaks_solutions():
    sol = R.closed_form_solution("X2", {"g": 1.0, "f0": 1.0})
    image = R.transformed_solution(sol, "X5", 0.3, "coriolis")
    assert not R.residual_check(image).passed


# --- integration -------------------------------------------------------------

REF = {"u0": 1.0, "a0": 2.0}


def test_travelling_wave_reference_run():
    tr = R.integrate_reduced("X1+a2X2", None, [0.0, 1.0], (0.0, 5.0), constants=REF)
    assert tr.ok
    assert np.all(tr.y[:, 1] > 0)


def test_travelling_wave_hits_the_fold():
    # a0 = 0.5 < u0: the fold g h^3 + a0^2 - u0^2 = 0 is reached almost at once
    tr = R.integrate_reduced("X1+a2X2", None, [0.0, 1.0], (0.0, 5.0), constants={"u0": 1.0, "a0": 0.5})
    assert tr.status == "wall"
    assert tr.wall_at == pytest.approx(0.0957, abs=1e-3)
    assert "fold" in tr.wall_label


def test_sub_alfvenic_condition():
    with pytest.raises(R.ParameterError):
        R.integrate_reduced("X1+a2X2", None, [0.0, 1.0], constants={"u0": 1.0, "a0": 1.0})


def test_initial_data_on_a_wall():
    with pytest.raises(R.WallError):
        R.integrate_reduced("X1+a2X2", None, [0.0, 0.0], constants=REF)


@pytest.mark.parametrize("name,initial,consts", [
    ("X1+a2X2", [0.0, 1.0], REF),
    ("X2+z2Z2", [1.0], {**REF, "v0": 1 / 3}),
    ("X1", [1.0], REF),
])
def test_self_convergence(name, initial, consts):
    assert R.self_convergence(name, None, initial, (0.0, 5.0), constants=consts) <= 1e-6


def test_stationary_point_of_the_shifted_profile():
    zeta_hat = 1.0
    c = R._consts({**REF, "v0": zeta_hat / 3})  # f0 u0^2 zeta_hat / (a0^2 - u0^2)
    dh = R._sp_rhs(zeta_hat, [1.4], R._params(None), c)[0]
    assert abs(dh) < 1e-15


def test_scaling_system_keeps_a_constant():
    tr = R.integrate_reduced("Z1", None, [1.0, 0.0, -1.96, 0.1, 0.0], (0.0, 5.0),
                             s_eval=np.linspace(0, 5, 51))
    assert tr.ok
    assert np.abs(tr.y[:, 3] - 0.1).max() <= 1e-9


def test_generic_and_compact_integrations_agree():
    p = {"g": 1.0, "f0": 1.0, "z2": 0.5, "a10": 1.0}
    c = R._consts(None)
    y0 = [0.4, 0.6, 0.3]
    full0 = R._x2x10z2_full(0.0, y0, p, c)
    a = R.integrate_reduced("X2+a10X10+z2Z2", p, y0, (0.0, 3.0), constants=c)
    b = R.integrate_reduced("X2+a10X10+z2Z2", p, full0, (0.0, 3.0), form="generic", constants=c)
    assert np.allclose(a.endpoint(), b.endpoint()[[1, 2, 4]], atol=1e-6)


def test_trajectory_csv_format():
    tr = R.integrate_reduced("X1+a2X2", None, [0.0, 1.0], (0.0, 1.0), constants=REF,
                             s_eval=[0.0, 0.5, 1.0])
    text = tr.to_csv(["demo"])
    assert "\r" not in text
    lines = text.split("\n")
    assert lines[0] == "# demo" and lines[1] == "xi,v,h"
    rows = list(csv.reader(io.StringIO("\n".join(lines[2:]))))
    assert len(rows) == 3 and float(rows[1][0]) == 0.5
    assert len(rows[1][2].replace("-", "").replace(".", "").lstrip("0")) >= 15


def test_solver_config_validation():
    with pytest.raises(ValueError):
        R.ODESolverConfig(rtol=0)
    assert R.ODESolverConfig().halved().rtol == 5e-9
