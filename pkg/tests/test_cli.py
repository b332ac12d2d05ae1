# tests/test_cli.py
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import orjson
import pytest

from divseek.main import main
from divseek.models.components import ScenarioConfig
from divseek.store import read_trajectory
from divseek.store.files import SWEEP_COLUMNS, trajectory_header
from divseek.tools.simulate import simulate_scenario

ROOT = Path(__file__).resolve().parent.parent
CONFIGS = ROOT / "configs"


def _scenario_doc(**overrides) -> dict:
    doc = orjson.loads((CONFIGS / "ex2_large_a.json").read_bytes())
    doc["integrator"] = {"steps_per_fast_period": 64, "t_final": 2.0}
    doc.pop("output")
    doc.update(overrides)
    return doc


def _write(path: Path, doc: dict) -> str:
    path.write_bytes(orjson.dumps(doc))
    return str(path)


def _lines(text: str) -> list[dict]:
    return [orjson.loads(line) for line in text.splitlines() if line.strip()]


# ------------------------------------------------------------------------------
# schema / config errors
# ------------------------------------------------------------------------------
def test_schema_prints_scenario_fields(capsys):
    assert main(["schema", "scenario"]) == 0
    schema = orjson.loads(capsys.readouterr().out)
    assert {"objective", "control", "initial"} <= set(schema["properties"])


def test_nonpositive_radius_is_a_config_error(tmp_path, capsys):
    doc = _scenario_doc()
    doc["control"]["a"] = -1.0
    assert main(["simulate", "--config", _write(tmp_path / "bad.json", doc)]) == 2
    err = capsys.readouterr().err
    assert "divseek-error: config:" in err
    assert "control.a" in err


def test_unknown_key_and_missing_file(tmp_path, capsys):
    assert main(["simulate", "--config", _write(tmp_path / "x.json", _scenario_doc(gain=1))]) == 2
    assert main(["simulate", "--config", str(tmp_path / "missing.json")]) == 2
    assert main(["simulate"]) == 2
    assert capsys.readouterr().err.count("divseek-error: config:") == 3


# ------------------------------------------------------------------------------
# simulate
# ------------------------------------------------------------------------------
def test_simulate_writes_trajectory_and_summary(tmp_path, capsys):
    config_path = _write(tmp_path / "ex2.json", _scenario_doc())
    out = tmp_path / "runs" / "ex2.csv"
    assert main(["simulate", "--config", config_path, "--out", str(out)]) == 0

    summary = _lines(capsys.readouterr().out)[-1]
    assert summary["trajectory_file"] == str(out)
    assert summary["scenario"] == "ex2_large_a"
    assert summary["final_time"] == pytest.approx(2.0)

    with out.open(newline="") as fh:
        assert next(csv.reader(fh)) == trajectory_header(3)

    expected = simulate_scenario(ScenarioConfig.model_validate(_scenario_doc()))
    loaded = read_trajectory(out)
    assert np.array_equal(loaded.times, expected.times)
    assert np.array_equal(loaded.states, expected.states)
    assert np.array_equal(loaded.filter_states, expected.filter_states)
    assert np.array_equal(loaded.transformed_states(), expected.transformed_states())


def test_simulate_is_reproducible(tmp_path):
    doc = _scenario_doc(
        disturbance={"kind": "piecewise_uniform", "bound": 0.05, "dwell": 0.5, "seed": 2}
    )
    config_path = _write(tmp_path / "ex2.json", doc)
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["simulate", "--config", config_path, "--out", str(first)]) == 0
    assert main(["simulate", "--config", config_path, "--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()


# ------------------------------------------------------------------------------
# field
# ------------------------------------------------------------------------------
def test_field_grid_of_averaged_quadratic(tmp_path, capsys):
    doc = {
        "objective": {"id": "quadratic", "params": {"matrix": [[1.0, 0.0], [0.0, 1.0]]}},
        "dimension": 2,
        "a": 0.5,
        "axes": [{"index": 0, "min": 0.0, "max": 2.0, "count": 3}],
    }
    out = tmp_path / "grid.csv"
    assert main(["field", "--config", _write(tmp_path / "f.json", doc), "--out", str(out)]) == 0
    assert _lines(capsys.readouterr().out)[-1]["cells"] == 3

    with out.open(newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["x1", "value"]
    # |x|^2 averaged over the ball of radius a in the plane adds a^2 / 2
    values = [float(r[1]) for r in rows[1:]]
    assert np.allclose(values, [0.125, 1.125, 4.125], atol=1e-10)


def _radial_sign_changes(grid: Path) -> int:
    with grid.open(newline="") as fh:
        rows = [tuple(map(float, r)) for r in list(csv.reader(fh))[1:]]
    offset = min(abs(r[1]) for r in rows)
    ray = sorted((x1, v) for x1, x2, v in rows if abs(x2) == offset and x1 >= 0.0)
    steps = np.diff([v for _, v in ray])
    signs = np.sign(steps[steps != 0.0])
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def test_field_averaging_washes_out_ripples(tmp_path, capsys):
    counts = {}
    for name in ("field_ex1_a0", "field_ex1_a04"):
        out = tmp_path / f"{name}.csv"
        assert main(["field", "--config", str(CONFIGS / f"{name}.json"), "--out", str(out)]) == 0
        assert _lines(capsys.readouterr().out)[-1]["cells"] == 81 * 81
        counts[name] = _radial_sign_changes(out)
    assert counts["field_ex1_a0"] >= 5
    assert counts["field_ex1_a04"] < counts["field_ex1_a0"]


# ------------------------------------------------------------------------------
# verify
# ------------------------------------------------------------------------------
def test_verify_geometry_suite(capsys):
    assert main(["verify", "--suite", "geometry"]) == 0
    reports = _lines(capsys.readouterr().out)
    assert len(reports) == 6
    assert all(r["passed"] for r in reports)


def test_verify_rejects_unknown_suite(capsys):
    assert main(["verify", "--suite", "everything"]) == 2


# ------------------------------------------------------------------------------
# sweep
# ------------------------------------------------------------------------------
def test_sweep_rejects_bad_values(tmp_path, capsys):
    config_path = _write(tmp_path / "ex2.json", _scenario_doc())
    assert main(["sweep", "--config", config_path, "--axis", "a", "--values", ""]) == 2
    assert main(["sweep", "--config", config_path, "--axis", "k", "--values", "1.5"]) == 2
    assert main(["sweep", "--config", config_path, "--axis", "a", "--values", "x"]) == 2


def test_sweep_writes_one_row_per_value(tmp_path, capsys):
    config_path = _write(tmp_path / "ex2.json", _scenario_doc())
    out = tmp_path / "sweep.csv"
    argv = ["sweep", "--config", config_path, "--axis", "a", "--values", "0.5,1", "--jobs", "1"]
    assert main([*argv, "--out", str(out)]) == 0
    assert _lines(capsys.readouterr().out)[-1] == {"rows": 2, "failed": 0, "sweep_file": str(out)}

    with out.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert tuple(rows[0]) == SWEEP_COLUMNS
    assert [float(r["value"]) for r in rows] == [0.5, 1.0]
    assert all(r["error"] == "" for r in rows)


def test_sweep_records_invalid_points_instead_of_failing(tmp_path, capsys):
    doc = _scenario_doc()
    doc["control"].update(radius_decay=0.1, radius_floor=0.8)
    config_path = _write(tmp_path / "ex2.json", doc)
    out = tmp_path / "sweep.csv"
    argv = ["sweep", "--config", config_path, "--axis", "a", "--values", "0.5,1", "--jobs", "1"]
    assert main([*argv, "--out", str(out)]) == 0
    assert _lines(capsys.readouterr().out)[-1]["failed"] == 1

    with out.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert rows[0]["error"].startswith("divseek-error: config: control")
    assert rows[1]["error"] == ""
