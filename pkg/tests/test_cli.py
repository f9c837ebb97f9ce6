import json
from pathlib import Path

import pytest

from hardycert.cli import main

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"


def run(tmp_path, *argv):
    return main([*argv, "--out", str(tmp_path)])


def report(tmp_path):
    return json.loads((tmp_path / "report.json").read_text())


@pytest.mark.parametrize("command, problem, extra, code", [
    ("certify", "hardy.toml", ["--cross-ref-n", "256"], 0),
    ("certify", "sup_target.toml", ["--cross-ref-n", "0"], 0),
    ("certify", "exp_counterexample.toml", [], 1),
    ("sobolev", "derivative.toml", [], 0),
    ("sobolev", "top_order_p_lt_q.toml", [], 2),
    ("sobolev", "full_unweighted.toml", ["--full"], 2),
    ("multiplier", "multiplier.toml", [], 0),
])
def test_exit_codes(tmp_path, command, problem, extra, code):
    assert run(tmp_path, command, str(PROBLEMS / problem), *extra) == code


def test_certify_report_contents(tmp_path, capsys):
    assert run(tmp_path, "certify", str(PROBLEMS / "hardy.toml"), "--cross-ref-n", "256") == 0
    rep = report(tmp_path)
    assert rep["status"] == "Finite"
    assert rep["upperBound"] == pytest.approx(2.0, rel=1e-6)
    assert 1.0 <= rep["crossRef"]["normLowerBound"] <= 2.0
    assert rep["manifest"]["config"]["grid"]["perDecade"] == 16
    assert json.loads(capsys.readouterr().out) == rep
    header = (tmp_path / "curves.csv").read_text().splitlines()[0]
    assert header == "r,F_0"
    assert "wallClockSeconds" in json.loads((tmp_path / "timing.json").read_text())


def test_report_is_byte_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        main(["certify", str(PROBLEMS / "hardy.toml"), "--cross-ref-n", "128",
              "--out", str(d), "--per-decade", "8"])
    assert (a / "report.json").read_bytes().replace(b"/a/", b"/b/") == \
        (b / "report.json").read_bytes()
    assert (a / "curves.csv").read_bytes() == (b / "curves.csv").read_bytes()


def test_failed_conditions_named_on_stderr(tmp_path, capsys):
    run(tmp_path, "sobolev", str(PROBLEMS / "full_unweighted.toml"), "--full")
    err = capsys.readouterr().err
    assert "c25 (images of low-order monomials)" in err
    assert "c25" in report(tmp_path)["failed"]


def test_condition_violation_reports_evidence(tmp_path, capsys):
    assert run(tmp_path, "certify", str(PROBLEMS / "exp_counterexample.toml")) == 1
    err = capsys.readouterr().err
    assert "c22 (doubling condition)" in err
    assert '"status": "Infinite"' in err


def test_csv_echo(tmp_path, capsys):
    run(tmp_path, "multiplier", str(PROBLEMS / "multiplier.toml"), "--format", "csv")
    assert capsys.readouterr().out.splitlines()[0] == "r,F_m2"


def test_opnorm_command(tmp_path):
    code = run(tmp_path, "opnorm", str(PROBLEMS / "hardy.toml"), "--N", "128",
               "--domain-min", "1e-2", "--domain-max", "1e2")
    assert code == 0
    rep = report(tmp_path)
    assert rep["N"] == 128 and rep["method"] == "power"
    assert 1.0 < rep["lowerBound"] < 2.0


def test_extremal_command(tmp_path):
    assert run(tmp_path, "extremal", "--n", "1", "--s", "2", "--r", "3") == 0
    rep = report(tmp_path)
    assert rep["roots"][0] == pytest.approx(2.0, abs=1e-10)
    assert rep["rootBound"]["ok"]


@pytest.mark.parametrize("text, message", [
    ("[weights\nu = 1", "malformed TOML"),
    ("[weights]\nu = \"1\"\nv = \"1\"\n", "missing [exponents]"),
    ("[coefficients]\na = [\"x +\"]\n[weights]\nu = \"1\"\nv = \"1\"\n[exponents]\np = 2\n",
     "coefficients.a[0]"),
    ("[coefficients]\na = [\"1\"]\n[weights]\nu = \"1\"\nv = \"1\"\n[exponents]\np = 3\nq = 2\n",
     "p <= q"),
])
def test_bad_input(tmp_path, capsys, text, message):
    path = tmp_path / "bad.toml"
    path.write_text(text)
    assert run(tmp_path, "certify", str(path)) == 1
    assert message in capsys.readouterr().err


def test_missing_file(tmp_path, capsys):
    assert run(tmp_path, "certify", str(tmp_path / "nope.toml")) == 1
    assert "nope.toml" in capsys.readouterr().err
