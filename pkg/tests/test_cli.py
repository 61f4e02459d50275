import json

import pytest

from swmhd_lie.cli import main


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def test_tables(tmp_path, capsys):
    assert run(tmp_path, "tables", "--case", "coriolis") == 0
    assert (tmp_path / "commutator_coriolis.md").exists()
    doc = json.loads((tmp_path / "adjoint_coriolis.json").read_text())
    assert doc["config"]["case"] == "coriolis"
    assert doc["result"]["counts"]["mismatch"] == 0


def test_tables_are_deterministic(tmp_path):
    run(tmp_path / "a", "tables", "--case", "full")
    run(tmp_path / "a2", "tables", "--case", "full")
    a = (tmp_path / "a" / "adjoint_full.md").read_text().split("\n", 2)[2]
    b = (tmp_path / "a2" / "adjoint_full.md").read_text().split("\n", 2)[2]
    assert a == b


def test_verify_full_with_galilean_probe(tmp_path, capsys):
    assert run(tmp_path, "verify", "--case", "full", "--g", "1", "--f0", "1", "--include", "X5") == 0
    out = capsys.readouterr().out
    assert "6/6 generators pass" in out
    rows = json.loads((tmp_path / "verify_full.json").read_text())["result"]["checks"]
    assert {r["name"]: r["passed"] for r in rows}["X5"] is False


def test_verify_rejects_inconsistent_parameters(tmp_path):
    assert run(tmp_path, "verify", "--case", "free", "--g", "1") == 1


def test_optimal(tmp_path, capsys):
    assert run(tmp_path, "optimal", "--a1", "1", "--z1", "1") == 0
    assert "branch I" in capsys.readouterr().out
    assert run(tmp_path, "optimal", "--a2", "1", "--a10", "1", "--z2", "1", "--z3", "1") == 0
    assert "{a2X2+a10X10+z2Z2+z3Z3}" in capsys.readouterr().out
    assert run(tmp_path, "optimal") == 1


def test_reduce(tmp_path, capsys):
    assert run(tmp_path, "reduce", "--case", "Z1") == 0
    out = capsys.readouterr().out
    assert "H_s + 3*H*U = 0" in out
    assert (tmp_path / "reduce_Z1.txt").read_text().startswith("# command: reduce")


def test_integrate_reference_and_wall(tmp_path):
    assert run(tmp_path, "integrate", "--case", "X1+a2X2") == 0
    text = (tmp_path / "trajectory_X1_a2X2.csv").read_text()
    assert "xi,v,h" in text
    assert run(tmp_path, "integrate", "--case", "X1+a2X2", "--const", "a0=0.5") == 3


def test_integrate_is_byte_identical(tmp_path):
    run(tmp_path, "integrate", "--case", "Z1")
    first = (tmp_path / "trajectory_Z1.csv").read_bytes()
    run(tmp_path, "integrate", "--case", "Z1")
    assert (tmp_path / "trajectory_Z1.csv").read_bytes() == first


def test_simulate_convergence(tmp_path, capsys):
    assert run(tmp_path, "simulate", "--init", "X2-closed-form", "--convergence", "50,100") == 0
    assert "n_cells,l1_error,observed_order" in (tmp_path / "convergence_X2.csv").read_text()


def test_report(tmp_path, capsys):
    assert run(tmp_path, "report", "--param", "f0=0.8", "--param", "g=1.3") == 0
    doc = json.loads((tmp_path / "discrepancies.json").read_text())
    assert len(doc["result"]["closed_forms"]) == 5


def test_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"case": "free", "trials": 5}))
    assert main(["verify", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    assert main(["verify", "--config", str(tmp_path / "nope.json")]) == 1


def test_bad_arguments_exit_with_config_error(tmp_path):
    with pytest.raises(SystemExit) as err:
        main(["tables", "--case", "mars"])
    assert err.value.code == 1
    assert run(tmp_path, "reduce", "--case", "Z2", "--param", "f0=zero") == 1
