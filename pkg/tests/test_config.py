# tests/test_config.py
from __future__ import annotations

from pathlib import Path

import pytest
from pydantic import ValidationError

from divseek.data.scenarios import EXAMPLES, get_example
from divseek.errors import (
    ConfigError,
    DivergenceError,
    DivseekError,
    NonFiniteObjectiveError,
    QuadratureError,
)
from divseek.models.components import (
    AxisGrid,
    ControlParams,
    FieldGridRequest,
    IntegratorSpec,
    ScenarioConfig,
    SweepSpec,
)
from divseek.store import get_settings, load_field_request, load_scenario_config
from divseek.util.schema import format_validation_error

ROOT = Path(__file__).resolve().parent.parent
CONFIGS = ROOT / "configs"


# ------------------------------------------------------------------------------
# Settings
# ------------------------------------------------------------------------------
def test_settings_read_environment(monkeypatch):
    monkeypatch.setenv("DIVSEEK_DEFAULT_JOBS", "3")
    monkeypatch.setenv("DIVSEEK_LOG_LEVEL", "DEBUG")
    settings = get_settings()
    assert settings.default_jobs == 3
    assert settings.log_level == "DEBUG"


def test_settings_reject_zero_jobs(monkeypatch):
    monkeypatch.setenv("DIVSEEK_DEFAULT_JOBS", "0")
    with pytest.raises(ValidationError):
        get_settings()


# ------------------------------------------------------------------------------
# Models
# ------------------------------------------------------------------------------
def test_control_params_constraints():
    with pytest.raises(ValidationError):
        ControlParams(n=1, a=1.0, b=1.0, h=1.0, omega=1.0, k=1)
    with pytest.raises(ValidationError):
        ControlParams(n=3, a=1.0, b=0.0, h=1.0, omega=1.0, k=1)
    with pytest.raises(ValidationError):
        ControlParams(n=3, a=1.0, b=1.0, h=1.0, omega=1.0, k=0)


def test_integrator_requires_enough_steps_per_period():
    with pytest.raises(ValidationError):
        IntegratorSpec(steps_per_fast_period=16)


def test_scenario_initial_state_must_match_dimension():
    with pytest.raises(ValidationError):
        ScenarioConfig.model_validate(
            {
                "objective": {"id": "ringed_gaussian_3d"},
                "control": {"n": 3, "a": 1.0, "b": 1.0, "h": 1.0, "omega": 1.0, "k": 2},
                "initial": {"x": [1.0, 2.0]},
            }
        )


def test_field_request_axes():
    axis = AxisGrid(index=0, min=-1.0, max=1.0, count=3)
    with pytest.raises(ValidationError):
        AxisGrid(index=0, min=1.0, max=1.0, count=3)
    with pytest.raises(ValidationError):
        FieldGridRequest(objective={"id": "constant"}, dimension=2, axes=[axis, axis])
    with pytest.raises(ValidationError):
        FieldGridRequest(
            objective={"id": "constant"},
            dimension=1,
            axes=[AxisGrid(index=1, min=0.0, max=1.0, count=2)],
        )


def test_sweep_spec_values():
    assert SweepSpec(axis="k", values=[2, 3]).values == [2.0, 3.0]
    with pytest.raises(ValidationError):
        SweepSpec(axis="omega", values=[1.0, 0.0])
    with pytest.raises(ValidationError):
        SweepSpec(axis="delta", values=[float("nan")])


def test_format_validation_error_names_fields():
    with pytest.raises(ValidationError) as info:
        ControlParams(n=3, a=-1.0, b=1.0, h=1.0, omega=1.0, k=2)
    line = format_validation_error(info.value, prefix="control")
    assert line.startswith("control.a: ")
    assert "\n" not in line


# ------------------------------------------------------------------------------
# Config files
# ------------------------------------------------------------------------------
@pytest.mark.parametrize("example_id", sorted(EXAMPLES))
def test_shipped_configs_match_built_in_scenarios(example_id):
    config = load_scenario_config(CONFIGS / f"{example_id}.json")
    expected = EXAMPLES[example_id]
    assert config.name == expected.name
    assert config.objective == expected.objective
    assert config.control == expected.control
    assert config.initial == expected.initial
    assert config.integrator.t_final == expected.integrator.t_final


def test_shipped_field_configs_load():
    for name in ("field_ex1_a0.json", "field_ex1_a04.json"):
        request = load_field_request(CONFIGS / name)
        assert request.dimension == 2
        assert [ax.count for ax in request.axes] == [81, 81]


def test_load_errors_are_config_errors(tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(ConfigError):
        load_scenario_config(broken)
    with pytest.raises(ConfigError):
        load_scenario_config(tmp_path / "absent.json")


def test_get_example_returns_independent_copies():
    first = get_example("ex2_large_a")
    first.initial.x[0] = 99.0
    assert get_example("ex2_large_a").initial.x[0] == 3.0
    with pytest.raises(ConfigError):
        get_example("ex9")


# ------------------------------------------------------------------------------
# Errors
# ------------------------------------------------------------------------------
def test_error_codes_and_exit_statuses():
    assert ConfigError("x").exit_code == 2
    assert DivergenceError("x", 1.0).exit_code == 3
    assert NonFiniteObjectiveError("x").exit_code == 3
    assert QuadratureError("x").exit_code == 4
    assert DivseekError("x").exit_code == 4
    assert DivergenceError("too big", 2.5).details == {"t": 2.5}
    line = QuadratureError("too many nodes").to_line()
    assert line == "divseek-error: quadrature: too many nodes"
