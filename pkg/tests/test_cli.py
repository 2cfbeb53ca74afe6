import csv
import json
import subprocess
import sys
from fractions import Fraction

import pytest

from circle_lab import __version__
from circle_lab.cli import fmt, run
from circle_lab.exponents import table1


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0] == f"# circle_lab {__version__}"
    assert lines[1].startswith("# config {")
    return list(csv.reader(lines[2:]))


def body(path):
    return path.read_text().split("\n", 2)[2]


def test_fmt():
    assert fmt(Fraction(-3, 7)) == "-3/7"
    assert fmt(0.1) == "0.1"
    assert fmt(None) == ""
    assert fmt(True) == "true"


def test_table1(tmp_path):
    out = tmp_path / "t1.csv"
    assert run(["exponents", "--table1", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert rows[0][:4] == ["k", "d0", "d0_decimal", "d0_star"]
    ref = table1()
    assert [int(r[0]) for r in rows[1:]] == list(range(3, 11))
    for r, (k, d0, star, _) in zip(rows[1:], ref):
        assert Fraction(r[1]) == d0
        assert int(r[3]) == star
    summary = json.loads(out.with_suffix(".json").read_text())
    assert summary["version"] == __version__ and summary["rows"] == 8


def test_exponents_single(tmp_path):
    out = tmp_path / "e.csv"
    assert run(["exponents", "--k", "3", "--d", "12", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert rows[1][0:2] == ["3", "12"]


def test_repcount(tmp_path):
    out = tmp_path / "r.csv"
    assert run(["repcount", "--k", "3", "--d", "2", "--lambda-max", "2", "--out", str(out)]) == 0
    assert [r[1] for r in read_csv(out)[1:]] == ["1", "4", "4"]


def test_repcount_cache_dir(tmp_path):
    argv = ["repcount", "--k", "3", "--d", "3", "--lambda-max", "60", "--cache-dir", str(tmp_path / "c")]
    assert run(argv + ["--out", str(tmp_path / "a.csv")]) == 0
    assert run(argv + ["--out", str(tmp_path / "b.csv")]) == 0
    assert (tmp_path / "c" / "rep_k3_d3_L60.bin").exists()
    assert json.loads((tmp_path / "b.json").read_text())["summary"]["cache_hit"] == "true"
    assert body(tmp_path / "a.csv") == body(tmp_path / "b.csv")


def test_stdout_stream(tmp_path, capsys):
    assert run(["repcount", "--k", "2", "--d", "2", "--lambda-max", "5", "--out", "-"]) == 0
    text = capsys.readouterr().out
    assert text.startswith("# circle_lab")
    assert text.splitlines()[2:] == ["lambda,count", "0,1", "1,4", "2,4", "3,0", "4,4", "5,8"]
    assert list(tmp_path.iterdir()) == []


def test_usage_errors(tmp_path, capsys):
    assert run(["exponents", "--table1", "--bogus", "--out", str(tmp_path / "x.csv")]) == 64
    assert run(["nosuchcommand"]) == 64
    assert run(["repcount", "--k", "3"]) == 64
    assert "usage" in capsys.readouterr().err
    assert run(["multiplier", "--mode", "ahat", "--k", "3", "--d", "4", "--out", str(tmp_path / "y.csv")]) == 64


def test_refusal_exit_code(tmp_path, capsys):
    assert run(["repcount", "--k", "1", "--d", "2", "--lambda-max", "5", "--out", str(tmp_path / "x.csv")]) == 2
    assert run(["oscillatory", "--mode", "jlambda", "--k", "3", "--d", "3", "--out", str(tmp_path / "y.csv")]) == 2
    assert "refused" in capsys.readouterr().err
    assert not (tmp_path / "x.csv").exists()


def test_internal_error_exit_code(tmp_path):
    assert run(["maximal", "--input", str(tmp_path / "missing.json"), "--k", "3", "--lambdas", "2",
                "--out", str(tmp_path / "m.csv")]) == 1


def test_byte_identical_reruns(tmp_path):
    argv = ["meanvalue", "--mode", "identity", "--k", "3", "--n", "6", "--samples", "5", "--seed", "11"]
    run(argv + ["--out", str(tmp_path / "a.csv"), "--threads", "2"])
    run(argv + ["--out", str(tmp_path / "b.csv"), "--threads", "2"])
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    run(argv[:-1] + ["12", "--out", str(tmp_path / "c.csv"), "--threads", "2"])
    assert body(tmp_path / "a.csv") != body(tmp_path / "c.csv")


@pytest.mark.parametrize("argv", [
    ["multiplier", "--mode", "error", "--k", "3", "--d", "5", "--lambda", "100", "--samples", "6", "--q-max", "4"],
    ["multiplier", "--mode", "main", "--k", "3", "--d", "5", "--lambda", "100", "--samples", "4", "--q-max", "3"],
    ["meanvalue", "--mode", "minor-sup", "--k", "3", "--n", "8,16", "--samples", "16"],
])
def test_thread_count_does_not_change_numbers(tmp_path, argv):
    run(argv + ["--out", str(tmp_path / "t1.csv"), "--threads", "1"])
    run(argv + ["--out", str(tmp_path / "t3.csv"), "--threads", "3"])
    assert body(tmp_path / "t1.csv") == body(tmp_path / "t3.csv")


def test_maximal_grid(tmp_path):
    grid = {"d": 2, "box": 3, "values": [[[0, 0], 1.0, 0.0]]}
    (tmp_path / "grid.json").write_text(json.dumps(grid))
    out = tmp_path / "m.csv"
    assert run(["maximal", "--input", str(tmp_path / "grid.json"), "--k", "2", "--lambdas", "1,2",
                "--p", "2", "--out", str(out)]) == 0
    rows = read_csv(out)[1:]
    vals = {(int(r[0]), int(r[1])): float(r[2]) for r in rows}
    # f = delta_0 and d = k, so the lambda^(1-d/k) weight is 1 on both circles
    assert vals[(1, 0)] == 1.0 and vals[(1, 1)] == 1.0 and vals[(-1, -1)] == 1.0
    assert len(vals) == 8
    assert float(json.loads(out.with_suffix(".json").read_text())["summary"]["lp_ratio_lower_bound"]) > 0


def test_gauss_and_arcs(tmp_path):
    assert run(["gauss", "--q", "7", "--k", "3", "--fourier-check", "--out", str(tmp_path / "g.csv")]) == 0
    summ = json.loads((tmp_path / "g.json").read_text())["summary"]
    assert float(summ["max_abs_diff"]) < 1e-9
    assert run(["arcs", "--n", "10", "--k", "3", "--out", str(tmp_path / "a.csv")]) == 0
    rows = read_csv(tmp_path / "a.csv")
    assert rows[0] == ["a", "q", "center", "radius"]
    assert rows[1][:2] == ["0", "1"]
    assert Fraction(rows[1][3]) == Fraction(1, 4 * 3 * 10**2)


def test_oscillatory_modes(tmp_path):
    (tmp_path / "spec.txt").write_text("order = 14\nphase_budget = 0.1  # finer\n")
    out = tmp_path / "s.csv"
    assert run(["oscillatory", "--mode", "sigma0-check", "--k", "3", "--d", "5", "--lambda", "100",
                "--spec-file", str(tmp_path / "spec.txt"), "--out", str(out)]) == 0
    assert float(read_csv(out)[1][3]) < 1e-6
    assert run(["oscillatory", "--mode", "vn", "--k", "3", "--n", "8", "--theta", "0.001", "--xi", "0.3",
                "--out", str(tmp_path / "v.csv")]) == 0


def test_meanvalue_vinogradov(tmp_path):
    out = tmp_path / "v.csv"
    assert run(["meanvalue", "--mode", "vinogradov", "--s", "2", "--k", "3", "--n", "4,8", "--out", str(out)]) == 0
    assert "slope" in json.loads(out.with_suffix(".json").read_text())["summary"]


def test_config_echo(tmp_path):
    out = tmp_path / "x.csv"
    run(["repcount", "--k", "3", "--d", "2", "--lambda-max", "3", "--seed", "9", "--out", str(out)])
    cfg = json.loads(out.read_text().splitlines()[1][len("# config "):])
    assert cfg["k"] == 3 and cfg["seed"] == 9 and cfg["command"] == "repcount"


def test_entry_points(tmp_path):
    r = subprocess.run([sys.executable, "-m", "circle_lab", "exponents", "--k", "4", "--out", "-"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "k,d0" in r.stdout
    r = subprocess.run([sys.executable, "-m", "circle_lab", "--frobnicate"], capture_output=True, text=True)
    assert r.returncode == 64
