import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from gaussian_eof import cli
from gaussian_eof.closed_form import entropy_of_tmss
from gaussian_eof.symplectic import tmss_cm


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def record(out):
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 1
    return rows[0]


# --- parsing -------------------------------------------------------------------------------------


def test_parse_triple_and_matrix():
    g = cli.parse_cm_text("2 1.5 1.5")
    assert g[0, 0] == 2 and g[0, 2] == 1.5 and g[1, 3] == -1.5
    m = cli.parse_cm_text("\n".join(" ".join(str(v) for v in row) for row in np.eye(4)))
    assert np.array_equal(m, np.eye(4))


def test_parse_error_reports_line_and_column():
    with pytest.raises(cli.DataFormatError, match="line 2, column 3"):
        cli.parse_cm_text("1 0 0 0\n0 x 0 0")


def test_parse_wrong_count():
    with pytest.raises(cli.DataFormatError, match="got 5"):
        cli.parse_cm_text("1 2 3 4 5")


# --- analyze -------------------------------------------------------------------------------------


def test_analyze_vacuum(capsys):
    code, out, _ = run(["analyze", "1 0 0", "--format", "csv"], capsys)
    assert code == cli.EXIT_OK
    rec = record(out)
    assert rec["separable"] == "true" and rec["eof_bits"] == "0"


def test_analyze_worked_example(capsys):
    code, out, _ = run(["analyze", "2 1.5 1.5", "--format", "csv"], capsys)
    assert code == 0
    rec = record(out)
    assert rec["eof_bits"] == "0.566165626623"
    assert abs(float(rec["eof_bits"]) - 0.56617) < 1e-5
    assert rec["delta"] == "0.5"


def test_analyze_text_and_json(capsys):
    _, text, _ = run(["analyze", "--n", "2", "--kx", "1.5", "--kp", "1.5"], capsys)
    assert "eof_bits" in text and "0.566165626623" in text
    _, js, _ = run(["analyze", "2 1.5 1.5", "--format", "json"], capsys)
    data = json.loads(js)
    assert data["valid"] is True and data["eof_bits"] == "0.566165626623"


def test_analyze_matrix_file(tmp_path, capsys):
    path = tmp_path / "tmss.txt"
    np.savetxt(path, tmss_cm(1.0), fmt="%.17g")
    code, out, _ = run(["analyze", "-i", str(path), "--format", "csv"], capsys)
    assert code == 0
    assert float(record(out)["eof_bits"]) == pytest.approx(entropy_of_tmss(1.0), abs=1e-9)


def test_analyze_stdin(monkeypatch, capsys):
    monkeypatch.setattr(sys, "stdin", io.StringIO("2 1.5 1.5\n"))
    code, out, _ = run(["analyze", "-i", "-", "--format", "csv"], capsys)
    assert code == 0 and record(out)["eof_bits"] == "0.566165626623"


def test_analyze_out_file(tmp_path, capsys):
    target = tmp_path / "r.csv"
    code, out, _ = run(["analyze", "2 1.5 1.5", "--format", "csv", "--out", str(target)], capsys)
    assert code == 0 and out == ""
    assert target.read_bytes().count(b"\r") == 0
    assert b"0.566165626623" in target.read_bytes()


@pytest.mark.parametrize(
    "argv, code",
    [
        (["analyze", "1 0.5 0.5"], cli.EXIT_INVALID),
        (["analyze", "1 0 0 0 0 3 0 0 0 0 2 0 0 0 0 2"], cli.EXIT_ASYMMETRIC),
        (["analyze", "1 0 zero"], cli.EXIT_DATAERR),
        (["analyze", "1 2"], cli.EXIT_DATAERR),
        (["analyze", "-i", "/nonexistent/cm.txt"], cli.EXIT_DATAERR),
        (["analyze", "1 0 0", "--n", "1"], cli.EXIT_USAGE),
        (["analyze"], cli.EXIT_USAGE),
        (["analyze", "--n", "2"], cli.EXIT_USAGE),
        (["verify", "lemma3"], cli.EXIT_USAGE),
        (["sweep", "--axis", "k", "--lo", "1", "--hi", "0"], cli.EXIT_USAGE),
        ([], cli.EXIT_USAGE),
    ],
)
def test_exit_codes(argv, code, capsys):
    assert run(argv, capsys)[0] == code


def test_argparse_errors_exit_64(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["sweep", "--axis", "q", "--lo", "0", "--hi", "1"])
    assert exc.value.code == cli.EXIT_USAGE


def test_tolerance_from_environment(monkeypatch, capsys):
    monkeypatch.setenv(cli.TOL_ENV, "not-a-number")
    assert run(["analyze", "1 0 0"], capsys)[0] == cli.EXIT_USAGE
    # a loose tolerance accepts a slightly unphysical matrix
    monkeypatch.setenv(cli.TOL_ENV, "1e-2")
    assert run(["analyze", "1 0.01 0.01"], capsys)[0] == cli.EXIT_OK
    monkeypatch.delenv(cli.TOL_ENV)
    assert run(["analyze", "1 0.01 0.01"], capsys)[0] == cli.EXIT_INVALID
    # the flag wins over the environment
    monkeypatch.setenv(cli.TOL_ENV, "1e-2")
    assert run(["analyze", "1 0.01 0.01", "--tol", "1e-12"], capsys)[0] == cli.EXIT_INVALID


# --- sweep ---------------------------------------------------------------------------------------


def sweep_table(argv, capsys):
    code, out, _ = run(["sweep"] + argv, capsys)
    assert code == 0
    return list(csv.DictReader(io.StringIO(out))), out


def test_sweep_k(capsys):
    rows, out = sweep_table(["--axis", "k", "--lo", "0", "--hi", "1.7", "--steps", "18", "--n", "2"], capsys)
    assert out.splitlines()[0] == ",".join(cli.CSV_COLUMNS)
    assert len(rows) == 18
    eof = np.array([float(r["eof_bits"]) for r in rows])
    k = np.array([float(r["kx"]) for r in rows])
    assert np.all(eof[k <= 1.0] == 0)
    assert np.all(np.diff(eof[k > 1.0]) > 0)
    assert all(r["kx"] == r["kp"] for r in rows)


def test_sweep_r_matches_entropy(capsys):
    rows, _ = sweep_table(["--axis", "r", "--lo", "0", "--hi", "2", "--steps", "9"], capsys)
    for r, row in zip(np.linspace(0, 2, 9), rows):
        assert float(row["eof_bits"]) == pytest.approx(entropy_of_tmss(r), rel=1e-11, abs=1e-12)


def test_sweep_flags_invalid_points(capsys):
    rows, _ = sweep_table(["--axis", "n", "--lo", "1", "--hi", "3", "--steps", "5", "--kx", "1.5", "--kp", "1.5"], capsys)
    assert [r["valid"] for r in rows] == ["false", "false", "true", "true", "true"]
    assert rows[0]["eof_bits"] == "nan"


def test_sweep_all_invalid_warns(capsys):
    code, out, err = run(["sweep", "--axis", "n", "--lo", "1", "--hi", "1.1", "--steps", "3", "--kx", "1.5", "--kp", "1.5"], capsys)
    assert code == 0 and "warning" in err and len(out.splitlines()) == 4


def test_single_point_sweep_equals_analyze(capsys):
    rows, _ = sweep_table(["--axis", "k", "--lo", "1.5", "--hi", "1.5", "--steps", "1", "--n", "2"], capsys)
    _, out, _ = run(["analyze", "2 1.5 1.5", "--format", "csv"], capsys)
    assert rows == [record(out)]


def test_sweep_points_agree_with_analyze(capsys):
    rows, _ = sweep_table(["--axis", "kx", "--lo", "1.0", "--hi", "1.6", "--steps", "4", "--n", "2", "--kp", "1.2"], capsys)
    # analyze the grid inputs; the reported standard form may reorder kx and kp
    for kx, row in zip(np.linspace(1.0, 1.6, 4), rows):
        _, out, _ = run(["analyze", f"2 {float(kx)!r} 1.2", "--format", "csv"], capsys)
        assert record(out) == row


def test_sweep_parallel_is_identical(capsys):
    argv = ["--axis", "k", "--lo", "0", "--hi", "1.7", "--steps", "18", "--n", "2"]
    _, serial = sweep_table(argv, capsys)
    _, parallel = sweep_table(argv + ["--jobs", "4"], capsys)
    assert serial == parallel


def test_sweep_byte_stable_across_processes(tmp_path):
    argv = [sys.executable, "-m", "gaussian_eof", "sweep", "--axis", "k", "--lo", "0", "--hi", "1.7", "--steps", "18"]
    outs = [subprocess.run(argv, capture_output=True, check=True).stdout for _ in range(2)]
    assert outs[0] == outs[1]
    assert b"\r" not in outs[0] and outs[0].endswith(b"\n")


# --- verify --------------------------------------------------------------------------------------


def test_verify_recursion(capsys):
    code, out, _ = run(["verify", "recursion", "--r", "0.5", "--perturb", "1e-3"], capsys)
    assert code == 0
    for label in ("fixed-point", "collapses", "escapes-normalization"):
        assert label in out


def test_verify_d0(capsys):
    code, out, _ = run(["verify", "d0", "--n", "2", "--kx", "1.5", "--kp", "1.5"], capsys)
    assert code == 0 and "[PASS]" in out


def test_verify_lemma1(capsys):
    code, out, _ = run(["verify", "lemma1", "--seed", "7", "--trials", "500", "--dim", "8"], capsys)
    assert code == 0 and out.rstrip().splitlines()[-1].startswith("lemma1: PASS")


def test_verify_prop1_small(capsys):
    code, _, _ = run(["verify", "prop1", "--trials", "100"], capsys)
    assert code == 0


def test_verify_failure_dumps_counterexample(capsys):
    # separable input: the decomposition does not apply, which is reported as a failure
    code, out, _ = run(["verify", "d0", "--n", "2", "--kx", "0.5", "--kp", "0.5"], capsys)
    assert code == cli.EXIT_FAIL
    assert "counterexample" in out and "kx=0.5" in out
