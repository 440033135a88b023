import json
import subprocess
import sys
from pathlib import Path

import pytest

from uag import __version__
from uag.cli import main

DATA = str(Path(__file__).parent / "data" / "groups.uag")


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_solve_json(capsys):
    code, out, _ = run(capsys, "solve", DATA, "Line", "Z4")
    assert code == 0
    data = json.loads(out)
    assert data["points"] == [[0, 0], [1, 3], [2, 2], [3, 1]]
    assert data["variables"] == ["x", "y"] and data["consistent"]


def test_text_format(capsys):
    code, out, _ = run(capsys, "solve", DATA, "Line", "Z2", "--format", "text")
    assert code == 0
    assert "points: [[0,0],[1,1]]" in out
    assert "consistent: true" in out


def test_output_file_and_config(capsys, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"format": "text", "threads": 2}))
    target = tmp_path / "out.txt"
    code, out, _ = run(capsys, "solve", DATA, "Any", "Z2", "--config", str(cfg), "-o", str(target))
    assert code == 0 and out == ""
    assert "points:" in target.read_text()


def test_global_options_before_subcommand(capsys):
    code, out, _ = run(capsys, "--format", "text", "solve", DATA, "Line", "Z2")
    assert code == 0 and out.startswith("consistent:")


@pytest.mark.parametrize("argv,code", [
    (["solve", DATA, "Line", "Z3"], 4),
    (["solve", DATA, "Nope", "Z2"], 4),
    (["solve", "/nonexistent.uag", "Line", "Z2"], 4),
    (["solve", DATA, "Line", "Z2", "--max-points", "2"], 3),
    (["decompose", DATA, "Odd", "Z2"], 5),
    (["radical-member", DATA, "Line", "Z2", "+(x,"], 2),
    (["check", "coord", DATA, "Z2"], 2),
    (["check", "coord", DATA, "Z4", "Z2", "--generators", "7"], 5),
    (["check", "coord", DATA, "Z4", "Z2", "--generators", "a"], 2),
    (["reduce", DATA, "Line", "Z2d"], 4),
])
def test_exit_codes(capsys, argv, code):
    got, _, err = run(capsys, *argv)
    assert got == code
    if code:
        assert err.startswith("uag: error:")


def test_non_algebraic_set_is_precondition_error(capsys, tmp_path):
    p = tmp_path / "w.uag"
    p.write_text(Path(DATA).read_text() + "\npoints Two in Z4 dim 1 { 1; }\n")
    code, _, err = run(capsys, "decompose", str(p), "Two", "Z4")
    assert code == 5 and "not algebraic" in err


def test_bad_config(capsys, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"colour": "red"}))
    code, _, _ = run(capsys, "solve", DATA, "Line", "Z2", "--config", str(cfg))
    assert code == 2
    code, _, _ = run(capsys, "solve", DATA, "Line", "Z2", "--threads", "0")
    assert code == 2


def test_check_claims(capsys):
    code, out, _ = run(capsys, "check", "coord", DATA, "Z4", "Z2")
    data = json.loads(out)
    assert code == 0 and data["answer"] is False
    assert data["evidence"]["unseparated_pair"] == [0, 2]
    code, out, _ = run(capsys, "check", "irr-coord", DATA, "Z2", "Z4")
    assert json.loads(out)["answer"] is True
    code, out, _ = run(capsys, "check", "empty-set", DATA, "Z2d")
    data = json.loads(out)
    assert data["answer"] is True and data["evidence"]["inconsistent_system"]["system"]
    code, out, _ = run(capsys, "check", "trivial-ucl", DATA, "Z2")
    assert json.loads(out)["answer"] is True


def test_other_subcommands(capsys):
    _, out, _ = run(capsys, "gamma", DATA, "Line", "Z4")
    data = json.loads(out)
    assert data["algebraic"] and data["gamma"]["size"] == 4
    _, out, _ = run(capsys, "reduce", DATA, "Padded", "Z4")
    data = json.loads(out)
    assert data["equivalent"] and data["irredundant"] and data["reduced_size"] == 2
    _, out, _ = run(capsys, "closure-member", DATA, "Line", "+(x,y) = e")
    assert json.loads(out)["member"] is True
    _, out, _ = run(capsys, "duality", DATA, "Diag", "Diag", "Z2")
    assert json.loads(out)["bijection"] is True
    _, out, _ = run(capsys, "isomorphic", DATA, "Any", "Diag", "Z2")
    assert json.loads(out)["isomorphic"] is True
    _, out, _ = run(capsys, "present", DATA, "Z4")
    assert json.loads(out)["generators"] == [1]


def test_json_is_deterministic(capsys):
    _, first, _ = run(capsys, "decompose", DATA, "Cross", "Z2d")
    _, second, _ = run(capsys, "decompose", DATA, "Cross", "Z2d")
    assert first == second


def test_module_entry_point_and_version():
    res = subprocess.run([sys.executable, "-m", "uag", "--version"], capture_output=True,
                         text=True, check=True)
    assert res.stdout.strip() == f"uag {__version__}"
