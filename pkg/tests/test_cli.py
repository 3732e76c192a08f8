import csv
import json

import pytest

from gnepkit import serialization
from gnepkit.cli import main, parse_grid, parse_params
from gnepkit.scenarios import build_cournot

COURNOT = ["--builtin", "cournot", "--params", "eta=4,p=1,c=1:1.5,cap=1"]


def test_parse_params():
    assert parse_params("eta=4,c=1:1.5") == {"eta": 4.0, "c": [1.0, 1.5]}
    assert parse_grid("r2=0.8:1", 2) == [(1.0, 0.8), (1.0, 1.0)]


def test_solve_exit_codes(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["solve", *COURNOT, "--out", str(out)]) == 0
    assert json.loads(out.read_text())["converged"]
    assert main(["solve", "--builtin", "cournot", "--params", "cap=3", "--method", "br",
                 "--max-iter", "2"]) == 2
    assert main(["solve", *COURNOT, "--method", "potential"]) == 0
    assert main(["solve", "--builtin", "cournot", "--method", "potential"]) == 1
    assert main(["solve", "--builtin", "cournot", "--params", "eta=oops"]) == 1
    assert main(["solve"]) == 1
    assert main(["solve", "--nonsense"]) == 1


def test_solve_from_scenario_file(tmp_path):
    path = tmp_path / "g.json"
    serialization.save(path, build_cournot(4.0, 1.0, [1.0, 1.5], cap=1.0))
    trace = tmp_path / "t.csv"
    assert main(["solve", "--scenario", str(path), "--r", "1,2", "--trace", str(trace)]) == 0
    assert trace.read_text().startswith("iter,residual")
    path.write_text('{"schema": 1}')
    assert main(["solve", "--scenario", str(path)]) == 1


@pytest.mark.parametrize("argv,code", [
    (["--map", "kkm-demo-a", "--property", "kkm"], 0),
    (["--map", "kkm-demo-a", "--property", "lsc", "--at", "0"], 3),
    (["--map", "kkm-demo-b", "--property", "graphconvex"], 3),
    (["--map", "shift", "--property", "graphconvex"], 1),
    ([*COURNOT, "--property", "dsc", "--r", "1,1"], 0),
    ([*COURNOT, "--property", "dsc", "--r", "1,100"], 3),
    ([*COURNOT, "--property", "gne", "--point", "0.75,0.25"], 0),
    ([*COURNOT, "--property", "gne", "--point", "0.5,0.25"], 3),
    ([*COURNOT, "--property", "geometric", "--point", "0.5,0.25"], 3),
    ([*COURNOT, "--property", "graphconvex", "--samples", "300"], 0),
    ([*COURNOT, "--property", "gne"], 1),
    (["--property", "kkm"], 1),
])
def test_check_exit_codes(argv, code, capsys):
    assert main(["check", *argv]) == code
    if code == 3:
        verdict = json.loads(capsys.readouterr().out)
        assert verdict["witness"] is not None


def test_sweep_csv(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["sweep", *COURNOT, "--grid", "r2=0.8:1:2", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert [round(float(r["x0"]), 6) for r in rows] == [round(8 / 9, 6), 0.75, round(1 / 3, 6)]
    assert rows[1]["dsc_min_eigenvalue"] == "2.0" and rows[1]["unique"] == "True"


def test_single_point_sweep_matches_solve(tmp_path):
    out_s, out_j = tmp_path / "s.csv", tmp_path / "s.json"
    assert main(["sweep", *COURNOT, "--grid", "r2=2", "--out", str(out_s)]) == 0
    assert main(["solve", *COURNOT, "--r", "1,2", "--out", str(out_j)]) == 0
    row = next(csv.DictReader(out_s.open()))
    assert [float(row["x0"]), float(row["x1"])] == json.loads(out_j.read_text())["x_star"]
    assert main(["sweep", *COURNOT, "--grid", "q2=1"]) == 1
