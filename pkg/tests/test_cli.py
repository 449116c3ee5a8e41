import json
import shutil
import subprocess

import pytest

from qrm import quadratic_polynomial
from qrm.cli import main
from qrm.errors import NonConvergent

BASILICA = json.dumps(quadratic_polynomial(-1).to_json())


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def test_per_intersect(capsys):
    code, data = run(capsys, "per", "intersect", "--n1", "1", "--rho1", "0", "--n2", "2", "--rho2", "0")
    assert code == 0 and data["total"] == 1
    (p,) = data["points"]
    assert (p["W"], p["X"], p["Y"], p["mult"]) == ("1", "2", "-4", 1)


def test_per_misc(capsys):
    code, data = run(capsys, "per", "infinity", "--n", "3", "--rho", "1/2")
    assert code == 0 and sorted(data["ideal_labels"]) == ["1/2", "1/3", "1/3"]
    code, data = run(capsys, "per", "dn", "--n", "10")
    assert data["d"] == 495
    code, data = run(capsys, "per", "divides", "--expr1", "3*W+2*X+Y", "--n2", "3", "--rho2", "1")
    assert data["divides"] is True
    code, data = run(capsys, "per", "eval", "--n", "2", "--rho", "0", "--X", "2", "--Y", "-4", "--map", BASILICA)
    assert code == 0 and data["normalized"] == 0 and data["member"]["agree"]


def test_degen(capsys):
    code, data = run(capsys, "degen", "--p", "1", "--q", "2", "--tau", "1", "--eps", "1e-4")
    assert code == 0
    pos = data["positions"][0]
    assert abs(pos["S"][0] - 0.50001) < 1e-4
    assert pos["printed_limit"] == [0.75, 0.0] and pos["rederived_limit"] == [0.5, 0.0]


def test_degen_count(capsys):
    code, data = run(capsys, "degen", "--p", "1", "--q", "2", "--tau", "1", "--eps", "1e-6", "--count")
    assert code == 0 and data["q_cycle_count"][0]["count"] == 4


def test_map_commands(capsys, tmp_path):
    code, data = run(capsys, "moduli", "--map", BASILICA)
    assert code == 0 and abs(data["X"][0] - 2) < 1e-12 and abs(data["Y"][0] + 4) < 1e-12
    f = tmp_path / "m.json"
    f.write_text(BASILICA)
    code, data = run(capsys, "cycles", "--map", "@" + str(f), "--n", "2")
    assert code == 0 and len(data["cycles"]) == 1
    code, data = run(capsys, "fix", "--map", str(f))
    assert data["multiplicity_sum"] == 3
    code, data = run(capsys, "classify", "--map", BASILICA)
    assert data["combined"] == "D" and data["periods"] == [1, 2]
    code, data = run(capsys, "audit", "--map", BASILICA, "--nmax", "3")
    assert code == 0 and data["fatou_shishikura"]["count"] == 2


def test_convert(capsys):
    code, data = run(capsys, "convert", "--from", "f", "--alpha", "-1", "--beta", "0", "--branch", "-1")
    assert code == 0 and data["F"]["gamma"] == [3.0, 0.0] and abs(data["F"]["delta"][0] + 1) < 1e-12
    code, data = run(capsys, "convert", "--from", "F", "--gamma", "3", "--delta", "-1")
    assert code == 0
    code, data = run(capsys, "convert", "--from", "moduli", "--X", "2", "--Y", "-4")
    assert code == 0 and len(data["map"]["coeffs"]) == 6


def test_out_file(capsys, tmp_path):
    out = tmp_path / "o.json"
    code = main(["per", "dn", "--n", "3", "--out", str(out)])
    assert code == 0 and json.loads(out.read_text())["d"] == 3


def test_render_determinism(capsys, tmp_path):
    a, b = tmp_path / "a.ppm", tmp_path / "b.ppm"
    for path in (a, b):
        code, data = run(capsys, "render", "--plane", "gk", "--res", "32", "--max-iter", "2000", "--image", str(path))
        assert code == 0
    assert a.read_bytes() == b.read_bytes()
    assert json.loads((tmp_path / "a.ppm.json").read_text())["job"]["resolution"] == 32


def test_exit_codes(capsys, monkeypatch):
    assert main(["moduli", "--map", json.dumps({"coeffs": [[0, 0]] * 6})]) == 2
    assert main(["moduli"]) == 2
    assert main(["nonsense"]) == 2
    assert main(["per", "eval", "--n", "5", "--rho", "0"]) == 2
    assert main(["degen", "--p", "1", "--q", "2", "--tau", "1", "--eps", "0.5"]) == 2

    def boom(*a, **k):
        raise NonConvergent("forced")

    monkeypatch.setattr("qrm.cycles.cycles", boom)
    assert main(["cycles", "--map", BASILICA, "--n", "2"]) == 3
    capsys.readouterr()


@pytest.mark.skipif(shutil.which("qrm") is None, reason="console script not installed")
def test_console_script():
    proc = subprocess.run(["qrm", "per", "dn", "--n", "4"], capture_output=True, text=True, check=True)
    assert json.loads(proc.stdout)["d"] == 6
