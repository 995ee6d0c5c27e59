import json
import subprocess
import sys

import pytest

from boolvis.cli import EXIT_ASSERT, EXIT_CONFIG, EXIT_OK, main, parse_grid


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse_grid():
    assert parse_grid("1:3:0.5") == [1.0, 1.5, 2.0, 2.5, 3.0]
    assert parse_grid("2,4,8") == [2.0, 4.0, 8.0]


def test_tail_csv(capsys):
    code, out, _ = run(capsys, "tail", "--grain", "const:0.5", "--r", "1:3:1", "--trials", "2000", "--seed", "1")
    assert code == EXIT_OK
    lines = out.strip().splitlines()
    assert lines[0] == "r,trials,hits,p_hat,ci_lo,ci_hi" and len(lines) == 4


def test_tail_json_to_file(capsys, tmp_path):
    path = tmp_path / "t.json"
    code, _, _ = run(capsys, "tail", "--r", "1,2", "--trials", "1000", "--format", "json", "--out", str(path))
    assert code == EXIT_OK
    doc = json.loads(path.read_text())
    assert doc["experiment"] == "tail" and len(doc["rows"]) == 2


def test_tail_3d_and_polygon(capsys, tmp_path):
    assert run(capsys, "tail", "--dim", "3", "--grain", "const:1", "--r", "0.5,1", "--trials", "500")[0] == EXIT_OK
    sq = tmp_path / "sq.json"
    sq.write_text(json.dumps([[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]]))
    assert run(capsys, "tail", "--grain", f"polygon:{sq}", "--r", "1,2", "--trials", "500")[0] == EXIT_OK


def test_slope_assert(capsys):
    args = ["slope", "--grain", "const:0.5", "--r", "0.5:3:0.5", "--trials", "20000", "--model", "linear"]
    code, out, _ = run(capsys, *args, "--target", "-0.065", "--rel-tol", "0.5", "--assert")
    assert code == EXIT_OK
    code, _, err = run(capsys, *args, "--target", "-50", "--assert")
    assert code == EXIT_ASSERT and "failed" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["tail", "--grain", "const:-1"],
        ["tail", "--grain", "weird:1"],
        ["tail", "--r", "3,2"],
        ["tail", "--trials", "5"],
        ["tail", "--dim", "3", "--grain", "polygon:/nonexistent"],
        ["gumbel-small", "--R", "0.9"],
        ["cover-prob", "siegel-holst", "--n", "5"],
        ["cover-prob", "stevens", "--a", "2", "--n", "5"],
    ],
)
def test_config_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == EXIT_CONFIG
    assert "invalid configuration" in err


def test_cover_prob(capsys):
    code, out, _ = run(capsys, "cover-prob", "stevens", "--a", "0.3", "--n", "10")
    assert code == EXIT_OK and 0 < json.loads(out)["summary"]["cover_prob"] < 1
    code, out, _ = run(capsys, "cover-prob", "shepp", "--a", "0.2", "--n", "10")
    assert json.loads(out)["summary"]["tight"] >= 0
    code, out, _ = run(capsys, "cover-prob", "twoatom", "--a", "0.3", "--n", "10")
    assert code == EXIT_OK
    code, out, _ = run(
        capsys, "cover-prob", "siegel-holst", "--n", "10", "--law", "twoatom:0.3", "--mc-samples", "2000"
    )
    assert code == EXIT_OK and "stderr" in json.loads(out)["summary"]


def test_experiments_small(capsys):
    assert run(capsys, "gumbel-small", "--R", "0.2", "--samples", "20")[0] == EXIT_OK
    assert run(capsys, "gumbel-clearing", "--clearing", "6", "--samples", "20", "--grain", "const:1")[0] == EXIT_OK
    code, out, _ = run(capsys, "bounds-check", "--grain", "const:0.5", "--r", "1,2", "--trials", "2000")
    assert code == EXIT_OK and out.startswith("r,trials,hits,p_hat,lower,upper,pass")
    code, out, _ = run(
        capsys, "d3-bracket", "--R", "1", "--r", "0.3:1.2:0.3", "--trials", "2000", "--format", "json"
    )
    assert code == EXIT_OK and "bracket_lo" in json.loads(out)["summary"]
    code, out, _ = run(capsys, "finger-check", "--grain", "const:0.5", "--r", "3", "--trials", "2000")
    assert code == EXIT_OK
    assert run(capsys, "finger-check", "--grain", "discrete:0.5:1", "--r", "3")[0] == EXIT_CONFIG


def test_module_entry_point():
    res = subprocess.run(
        [sys.executable, "-m", "boolvis.cli", "cover-prob", "stevens", "--a", "0.2", "--n", "4"],
        capture_output=True,
        text=True,
    )
    assert res.returncode == 0 and "cover_prob" in res.stdout
