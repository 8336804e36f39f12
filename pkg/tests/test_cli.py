import csv
import json
import math
import subprocess
import sys

import pytest

from fkdet.cli import main

LOG2 = math.log(2)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if code == 0 else json.loads(err))


def test_mahler(capsys):
    code, rep = run(capsys, "mahler", "y - 2", "--quadrature-n", "4096")
    assert code == 0
    assert rep["payload"]["log_det"] == pytest.approx(LOG2, abs=1e-14)
    assert rep["payload"]["quadrature"]["difference"] < 1e-8
    assert abs(run(capsys, "mahler", "y^3 - 1")[1]["payload"]["log_det"]) < 1e-12
    assert run(capsys, "mahler", "2")[1]["payload"]["log_det"] == pytest.approx(LOG2)


def test_mahler_errors(capsys):
    code, err = run(capsys, "mahler", "y +* 2")
    assert code == 2 and err["error"] == "parse" and "position 3" in err["message"]
    code, err = run(capsys, "mahler", "0")
    assert code == 2 and err["error"] == "zero_polynomial"


def test_lyapunov(capsys, tmp_path):
    f = tmp_path / "d.json"
    f.write_text(json.dumps([["2", "0"], ["0", "3"]]))
    code, rep = run(capsys, "lyapunov", str(f), "--steps", "10000")
    chis = [e["chi"] for e in rep["payload"]["spectrum"]]
    assert code == 0 and chis == pytest.approx([LOG2, math.log(3)], abs=1e-10)

    f.write_text(json.dumps({"matrix": [[1, 0], [0, 1]]}))
    rep = run(capsys, "lyapunov", str(f), "--steps", "1000")[1]
    assert rep["payload"]["spectrum"] == [{"chi": 0.0, "r": 2}]

    f.write_text(json.dumps([["y - 2"]]))
    rep = run(capsys, "lyapunov", str(f), "rot:golden")[1]
    assert abs(rep["payload"]["spectrum"][0]["chi"] - LOG2) < 5e-3
    assert rep["payload"]["sum_rule_gap"] < 1e-2


def test_lyapunov_errors(capsys, tmp_path):
    code, err = run(capsys, "lyapunov", str(tmp_path / "missing.json"))
    assert code == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "lyapunov", str(bad))[0] == 2
    zero = tmp_path / "zero.json"
    zero.write_text(json.dumps([[0]]))
    code, err = run(capsys, "lyapunov", str(zero), "--steps", "10")
    assert code == 3 and err["error"] == "degenerate_cocycle"


def test_det(capsys):
    code, rep = run(capsys, "det", "1 - 2*U", "--route", "both", "--steps", "100000")
    p = rep["payload"]
    assert code == 0 and abs(p["log_det"] - LOG2) < 1e-6
    assert p["discrepancy"] < 1e-5
    assert p["oracle"]["q_used"] == 4181 and p["oracle"]["route"] == "oracle"
    rep = run(capsys, "det", "1 - 5*U + 6*U^2", "--steps", "100000")[1]
    assert abs(rep["payload"]["log_det"] - math.log(6)) < 1e-6
    rep = run(capsys, "det", "y")[1]
    assert rep["payload"]["log_det"] == 0.0 and rep["payload"]["formula"]["route"] == "abelian"


def test_det_neg_inf_is_string(capsys):
    rep = run(capsys, "det", "1 - U", "cycle:4", "--route", "oracle", "--q", "8")[1]
    assert rep["payload"]["log_det"] == "-inf"


def test_det_errors(capsys):
    assert run(capsys, "det", "U*y")[0] == 2
    code, err = run(capsys, "det", "U - U")
    assert code == 2 and err["error"] == "not_normalizable"


def test_heisenberg(capsys):
    rep = run(capsys, "heisenberg", "1 - 2*x", "--outer-nodes", "16", "--per-fiber-steps", "10000")[1]
    assert abs(rep["payload"]["log_det"] - LOG2) < 1e-6
    rep = run(capsys, "heisenberg", "1 - (y - 2)*x", "--affine")[1]
    assert abs(rep["payload"]["log_det"] - LOG2) < 1e-10
    rep = run(capsys, "heisenberg", "1 - y*x", "--outer-nodes", "16", "--per-fiber-steps", "10000")[1]
    assert abs(rep["payload"]["log_det"]) < 1e-6


def test_heisenberg_errors(capsys):
    code, err = run(capsys, "heisenberg", "x^-1 + 1")
    assert code == 2 and "adjoint" in err["message"]
    assert run(capsys, "heisenberg", "1 - x^2", "--affine")[0] == 2


def test_brown(capsys, tmp_path):
    rep = run(capsys, "brown", "2")[1]
    assert rep["payload"]["circles"] == [{"radius": 2.0, "mass": 1}]
    f = tmp_path / "d.json"
    f.write_text(json.dumps([[2, 0], [0, 0.5]]))
    csv_path = tmp_path / "curve.csv"
    rep = run(capsys, "brown", str(f), "--steps", "1000", "--curve-csv", str(csv_path), "--curve-points", "50")[1]
    p = rep["payload"]
    assert [c["radius"] for c in p["circles"]] == pytest.approx([0.5, 2.0])
    assert p["total_mass"] == 2
    assert abs(p["curve_at_zero"]) < 1e-12
    rows = list(csv.reader(csv_path.open()))
    assert rows[0] == ["radius", "log_det"] and len(rows) == 51
    r, v = map(float, rows[-1])
    assert v == pytest.approx(2 * math.log(r), abs=1e-12)


def test_determinism(capsys):
    argv = ["det", "1 - (y - 2)*U + 0.5*U^2", "--steps", "20000", "--seed", "7"]
    a = run(capsys, *argv)[1]
    b = run(capsys, *argv)[1]
    a.pop("wall_time")
    b.pop("wall_time")
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
    assert a["seed"] == 7 and a["command"] == argv


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "fkdet", "mahler", "y - 2"], capture_output=True, text=True)
    assert out.returncode == 0
    assert json.loads(out.stdout)["payload"]["log_det"] == pytest.approx(LOG2)
    out = subprocess.run([sys.executable, "-m", "fkdet", "mahler"], capture_output=True, text=True)
    assert out.returncode == 2
