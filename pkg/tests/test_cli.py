import csv
import io
import json

import pytest

from owfecs.cli import EXIT_INVALID, EXIT_OK, EXIT_USAGE, main
from owfecs.evaluation import RING, Plan, route_cable_ids
from owfecs.farm import generate_candidates, layout_to_dict
from owfecs.instances import make_layout, t5


@pytest.fixture
def t5_file(tmp_path):
    p = tmp_path / "t5.json"
    p.write_text(json.dumps(layout_to_dict(t5())))
    return p


def test_plan_writes_outputs(t5_file, tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["plan", "--input", str(t5_file), "--max-range", "2.1", "--out", str(out)]) == EXIT_OK
    assert {p.name for p in out.iterdir()} == {"plan.json", "report.json", "report.txt", "layout.svg"}
    assert "Total" in capsys.readouterr().out
    plan = json.loads((out / "plan.json").read_text())
    assert plan["topology"] == "ring" and len(plan["routes"]) == 2
    assert main(["verify", "--input", str(t5_file), "--max-range", "2.1", "--plan", str(out / "plan.json")]) == EXIT_OK


@pytest.mark.parametrize("solver", ["oracle", "sweep-cws"])
def test_other_solvers(t5_file, tmp_path, solver):
    out = tmp_path / solver
    assert main(["plan", "--input", str(t5_file), "--max-range", "2.1", "--solver", solver, "--out", str(out)]) == EXIT_OK
    assert (out / "plan.json").exists()


def test_radial_plan(t5_file, tmp_path):
    out = tmp_path / "rad"
    assert main(["plan", "--input", str(t5_file), "--max-range", "2.1", "--topology", "radial", "--out", str(out)]) == EXIT_OK
    rep = json.loads((out / "report.json").read_text())
    assert rep["eeng"] > 0


def test_verify_crossing_plan(tmp_path, capsys):
    layout = make_layout("x", (0, 0), [(2, 2, 5), (0, 2, 5), (2, 0, 5)])
    lay = tmp_path / "x.json"
    lay.write_text(json.dumps(layout_to_dict(layout)))
    cs = generate_candidates(layout, 3.0)
    route = ("WT1", "WT2", "WT3")
    plan = tmp_path / "plan.json"
    plan.write_text(Plan.from_ids(RING, route_cable_ids(route, "Sub"), cs, [route]).to_json())
    code = main(["verify", "--input", str(lay), "--max-range", "3.0", "--plan", str(plan)])
    assert code == EXIT_INVALID
    doc = json.loads(capsys.readouterr().out)
    check = next(c for c in doc["checks"] if c["name"] == "no_crossing")
    assert check["items"] == [[["Sub", "WT1"], ["WT2", "WT3"]]]


@pytest.mark.parametrize("fmt", ["lp", "mps"])
def test_export(t5_file, tmp_path, fmt):
    assert main(["export", "--input", str(t5_file), "--max-range", "2.1", "--format", fmt, "--out", str(tmp_path)]) == EXIT_OK
    text = (tmp_path / f"model.{fmt}").read_text()
    assert ("Subject To" in text) if fmt == "lp" else text.startswith("NAME")


def test_sweep_csv(t5_file, capsys):
    assert main(["sweep", "--input", str(t5_file), "--max-range", "2.1"]) == EXIT_OK
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0] == ["start_id", "investment", "total"] and len(rows) == 6
    assert main(["sweep", "--input", str(t5_file), "--max-range", "2.1", "--start-wt", "WT2"]) == EXIT_OK
    assert len(capsys.readouterr().out.splitlines()) == 2


def test_oracle_json(t5_file, capsys):
    assert main(["oracle", "--input", str(t5_file), "--max-range", "2.1"]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["objective"] == pytest.approx(33729324.1240495, rel=1e-9)


@pytest.mark.parametrize(
    "argv",
    [
        ["plan"],
        ["frobnicate"],
        ["plan", "--input", "x.json", "--solver", "magic"],
        ["plan", "--input", "x.json", "--gap", "-1"],
    ],
)
def test_usage_errors(argv):
    with pytest.raises(SystemExit) as exc:
        code = main(argv)
        raise SystemExit(code)
    assert exc.value.code == EXIT_USAGE


def test_invalid_layout(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["plan", "--input", str(bad), "--max-range", "2"]) == EXIT_INVALID
    assert main(["plan", "--input", str(tmp_path / "missing.json"), "--max-range", "2"]) == EXIT_INVALID
