import argparse
import csv
import io
import json
import subprocess
import sys

import pytest

from qcfem.cli import CSV_COLUMNS, main, parse_formats, parse_levels


def test_parse_levels():
    assert parse_levels("2..4") == (2, 3, 4)
    assert parse_levels("1,3") == (1, 3)
    for bad in ("4..2", "0..2", "a", "3,3"):
        with pytest.raises(argparse.ArgumentTypeError):
            parse_levels(bad)


def test_parse_formats():
    assert parse_formats("csv,svg") == ("csv", "svg")
    with pytest.raises(argparse.ArgumentTypeError):
        parse_formats("png")


def _run(tmp_path, *args):
    out = tmp_path / "run"
    code = main(["convergence", "--example", "layer", "--eps", "1e-8", "--levels", "1..2",
                 "--out", str(out), *args])
    return code, out


def test_convergence_outputs(tmp_path):
    code, out = _run(tmp_path)
    assert code == 0
    text = (tmp_path / "run.csv").read_text()
    rows = list(csv.DictReader(io.StringIO(text)))
    assert tuple(text.splitlines()[0].split(",")) == CSV_COLUMNS
    assert len(rows) == 2
    assert all(rows[0][c] == "" for c in CSV_COLUMNS if c.startswith("rate_"))
    assert rows[1]["rate_l2"] != ""
    assert rows[1]["err_l2"] == "3.231e-01"

    data = json.loads((tmp_path / "run.json").read_text())
    assert data["columns"] == list(CSV_COLUMNS)
    assert data["rows"][1]["err_l2"] == pytest.approx(0.3231)
    assert data["rows"][0]["rate_l2"] is None

    svg = (tmp_path / "run.svg").read_text()
    assert svg.count('class="series"') == 4
    assert svg.count('class="guide"') == 3


def test_outputs_are_deterministic(tmp_path):
    _run(tmp_path / "a")
    _run(tmp_path / "b")
    for ext in ("csv", "json", "svg"):
        assert (tmp_path / "a" / f"run.{ext}").read_bytes() == (tmp_path / "b" / f"run.{ext}").read_bytes()


def test_timings_fill_seconds_column(tmp_path):
    _run(tmp_path, "--timings", "--formats", "csv")
    rows = list(csv.DictReader(open(tmp_path / "run.csv")))
    assert all(float(r["seconds"]) >= 0 for r in rows)
    assert not (tmp_path / "run.json").exists()


def test_csv_to_stdout(capsys):
    assert main(["interp-study", "--levels", "1..2"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS) and len(lines) == 3


def test_verify_passes(capsys):
    assert main(["verify", "--r", "1"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") >= 8


def test_solve_reports_multiplier(capsys):
    assert main(["solve", "--levels", "2"]) == 0
    err = capsys.readouterr().err
    assert "|p_h|" in err


@pytest.mark.parametrize("args", [
    ["convergence", "--eps", "-1"],
    ["convergence", "--levels", "3..1"],
    ["convergence", "--r", "3"],
    ["convergence", "--solver", "block", "--beta", "0"],
    ["frobnicate"],
])
def test_invalid_flags_exit_nonzero(args):
    with pytest.raises(SystemExit) as exc:
        main(args)
    assert exc.value.code != 0


def test_solver_failure_exit_status(capsys):
    code = main(["convergence", "--levels", "2", "--solver", "krylov", "--tol", "1e-300"])
    assert code != 0


def test_console_script_entry_point():
    res = subprocess.run([sys.executable, "-m", "qcfem.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "convergence" in res.stdout
