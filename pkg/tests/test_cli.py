import json
import subprocess
import sys

import pytest

from ffincidence import cli
from ffincidence import experiments as ex
from ffincidence import incidence as inc
from ffincidence import io


def run(capsys, *argv):
    code = cli.run(list(argv))
    out, err = capsys.readouterr()
    return code, out.strip(), err


def test_rectangles_energy_matches_oracle(capsys, tmp_path):
    counts = {}
    for method in ("energy", "oracle", "fast"):
        path = tmp_path / f"{method}.json"
        code, out, _ = run(capsys, "count-rectangles", "--p", "7", "--gen", "random:n=12,seed=1",
                           "--method", method, "--output", str(path))
        assert code == 0 and out.count("\n") == 0
        counts[method] = json.loads(path.read_text())["count"]
    assert len(set(counts.values())) == 1
    A = ex.generate(ex.GeneratorSpec.parse("random:n=12,seed=1", 7))
    assert counts["energy"] == inc.count_rectangles_oracle(A)


def test_corners_full_plane(capsys, tmp_path):
    path = tmp_path / "c.json"
    code, out, _ = run(capsys, "count-corners", "--p", "3", "--gen", "full-plane", "--output", str(path))
    assert code == 0 and out.endswith("count=144")
    report = json.loads(path.read_text())
    assert report["count"] == 144
    assert report["meta"]["constants_version"] == ex.CONSTANTS_VERSION
    assert report["meta"]["spec"] == "full-plane:seed=0"


def test_rich_lines_empty(capsys, tmp_path):
    path = tmp_path / "r.json"
    code, out, _ = run(capsys, "rich-lines", "--k", "100", "--p", "7", "--gen", "random:n=10",
                       "--output", str(path))
    assert code == 0
    assert json.loads(path.read_text())["lines"] == []


def test_input_file(capsys, tmp_path):
    pts = tmp_path / "sq.txt"
    io.write_point_file(pts, 7, [(0, 0), (1, 0), (1, 1), (0, 1)])
    code, out, _ = run(capsys, "count-rectangles", "--input", str(pts), "--method", "oracle")
    assert code == 0 and out.endswith("count=8")


@pytest.mark.parametrize("argv", [
    ["count-rectangles", "--p", "7", "--gen", "random:n=40", "--method", "oracle"],
    ["count-corners", "--p", "11", "--gen", "random:n=65", "--method", "oracle"],
    ["count-corners", "--p", "8", "--gen", "full-plane"],
    ["count-corners", "--gen", "full-plane"],
    ["count-corners", "--p", "7"],
    ["count-corners", "--p", "7", "--gen", "isotropic-line"],
    ["count-corners", "--p", "7", "--gen", "spiral"],
])
def test_precondition_errors_exit_2(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2 and out == "" and "ERROR" in err


def test_force_lifts_budget(capsys):
    code, _, _ = run(capsys, "count-corners", "--p", "11", "--gen", "random:n=65", "--method", "oracle",
                     "--force")
    assert code == 0


def test_malformed_and_duplicate_input(capsys, tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("p 7 dim 2\n1 1\n8 1\n")
    assert run(capsys, "count-corners", "--input", str(bad))[0] == 2
    bad.write_text("hello\n")
    assert run(capsys, "count-corners", "--input", str(bad))[0] == 2


def test_usage_errors(capsys):
    assert run(capsys, "count-corners", "--bogus")[0] == 2
    assert run(capsys, "frobnicate")[0] == 2
    assert run(capsys, "count-corners", "--input", "a", "--gen", "b")[0] == 2


def test_internal_error_exit_1(capsys, monkeypatch):
    def boom(args):
        raise RuntimeError("bug")
    monkeypatch.setitem(cli.COMMANDS, "energy", boom)
    code, out, err = run(capsys, "energy", "--p", "7", "--gen", "full-plane")
    assert code == 1 and "internal error" in err


@pytest.mark.parametrize("argv,key", [
    (["energy", "--p", "5", "--gen", "isotropic-line"], "lambda"),
    (["incidences", "--p", "13", "--gen", "cartesian-product:a=6,b=6", "--lines", "random:m=20,seed=2"],
     "incidences"),
    (["incidences", "--p", "3", "--gen", "full-plane", "--lines", "all"], "incidences"),
    (["decompose", "--p", "13", "--gen", "grid-union:k=4,m=2"], "checks"),
    (["profile", "--p", "11", "--gen", "random:n=20"], "I"),
    (["extension", "--p", "5", "--gen", "full-plane", "--r", "4"], "restriction_ratio"),
    (["restrict", "--p", "5", "--gen", "random:n=6"], "l2_sigma_norm"),
    (["certify", "--p", "7", "--gen", "random:n=30"], "regime"),
    (["sweep", "--bound", "stein_tomas", "--primes", "5", "--count", "3"], "instances"),
    (["sweep", "--bound", "rich_lines_crude", "--primes", "11", "--count", "3"], "instances"),
    (["sweep", "--bound", "vinh", "--primes", "7", "--count", "3"], "instances"),
    (["fit", "--family", "full-plane", "--primes", "3,7,11"], "aggregate"),
    (["fit", "--family", "random", "--p", "23", "--sizes", "20,40,80", "--counter", "rectangles"],
     "aggregate"),
])
def test_subcommands_write_reports(capsys, tmp_path, argv, key):
    path = tmp_path / "out.json"
    code, out, _ = run(capsys, *argv, "--output", str(path))
    assert code == 0 and out and "\n" not in out
    assert key in json.loads(path.read_text())


def test_adapters_match_library(capsys, tmp_path):
    from ffincidence import paraboloid as par
    path = tmp_path / "e.json"
    run(capsys, "energy", "--p", "5", "--gen", "isotropic-line", "--output", str(path))
    rep = json.loads(path.read_text())
    lib = par.energy_rectangle_identity_check(par.lift(ex.generate(ex.GeneratorSpec("isotropic-line", 5))))
    assert rep["lambda"] == lib.lam == 125 and rep["collinear_part"] == lib.collinear_part

    path = tmp_path / "fit.json"
    run(capsys, "fit", "--primes", "3,7,11,19", "--output", str(path))
    fit = ex.family_fit(ex.full_plane_family([3, 7, 11, 19]))
    assert json.loads(path.read_text())["aggregate"]["fit"]["exponent"] == fit.exponent


def test_csv_output(capsys, tmp_path):
    path = tmp_path / "s.csv"
    code, _, _ = run(capsys, "sweep", "--bound", "stein_tomas", "--primes", "5", "--count", "4",
                     "--output", str(path), "--format", "csv")
    assert code == 0
    lines = path.read_text().splitlines()
    assert lines[0].split(",")[:5] == ["p", "n", "measured", "bound", "ratio"]
    assert len(lines) == 5


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "ffincidence", "count-corners", "--p", "3", "--gen",
                          "full-plane"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip().endswith("count=144")
