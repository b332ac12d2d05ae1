# tests/test_verify.py
from __future__ import annotations

import math

import numpy as np
import pytest

from divseek import registry
from divseek.tools import verify
from divseek.data.scenarios import EXAMPLES, get_example
from divseek.enums import ObjectiveId, Suite
from divseek.errors import DivergenceError, QuadratureError
from divseek.models.components import ControlParams, ScenarioResult
from divseek.tools.objective import builtin_objective
from divseek.tools.simulate import Trajectory
from divseek.tools.verify import (
    check_change_of_variables,
    check_critical_radii,
    check_curve_representation,
    check_divergence_identity,
    check_example,
    check_field_limit,
    check_filling_bound,
    check_filter_bound,
    check_filter_limit,
    check_gram_consistency,
    check_iss_behavior,
    check_jacobian_fd,
    check_partition_correspondence,
    check_periodicity,
    check_quadrature_convergence,
    check_rescaling_identity,
    check_small_radius_limit,
    check_tangency,
    check_unit_norm,
    check_zero_objective,
    sample_ball_points,
    sup_deviation,
)


def _ringed():
    return builtin_objective(ObjectiveId.ringed_gaussian_3d)


def _boom_divergence():
    raise DivergenceError("state blew up", 1.5)


def _boom_plain():
    raise ValueError("bad input")


# ------------------------------------------------------------------------------
# Geometry
# ------------------------------------------------------------------------------
@pytest.mark.parametrize(
    "check",
    [
        check_unit_norm,
        check_periodicity,
        check_tangency,
        check_gram_consistency,
        check_jacobian_fd,
        check_partition_correspondence,
    ],
)
def test_geometry_checks_pass(check):
    report = check()
    assert report.passed, report.measured
    assert report.suite == "geometry"


def test_sample_ball_points_stay_in_shell():
    pts = sample_ball_points(3, 500, 4.0, seed=1, min_radius=1.5)
    r = np.linalg.norm(pts, axis=1)
    assert pts.shape == (500, 3)
    assert np.all((r >= 1.5 - 1e-12) & (r <= 4.0 + 1e-12))


# ------------------------------------------------------------------------------
# Ball average identities
# ------------------------------------------------------------------------------
def test_divergence_identity_linear_and_ringed():
    J = builtin_objective(ObjectiveId.linear, {"weights": [1.0, -1.0, 2.0]})
    assert check_divergence_identity(J, 3, 0.5, sample_ball_points(3, 3, 4.0)).passed
    assert check_divergence_identity(_ringed(), 3, 1.0, sample_ball_points(3, 3, 4.0)).passed


def test_divergence_identity_error_is_relative_to_finite_differences(monkeypatch):
    J = builtin_objective(ObjectiveId.linear, {"weights": [3.0, 4.0, 0.0]})
    monkeypatch.setattr(verify, "averaged_gradient", lambda *args, **kwargs: np.zeros(3))
    report = check_divergence_identity(J, 3, 0.5, [[1.0, 0.0, 0.0]])
    # |0 - w| / (1 + |w|) with |w| = 5
    assert report.measured["max_rel_error"] == pytest.approx(5.0 / 6.0, rel=1e-8)
    assert not report.passed


def test_divergence_identity_rejects_bad_points():
    with pytest.raises(ValueError):
        check_divergence_identity(_ringed(), 3, 1.0, np.empty((0, 3)))
    with pytest.raises(ValueError):
        check_divergence_identity(_ringed(), 3, 1.0, [[1.0, 2.0]])


def test_rescaling_identity():
    report = check_rescaling_identity(_ringed(), 3, 1.0, [[0.5, 0.5, 0.5], [2.0, -1.0, 0.0]])
    assert report.passed, report.measured


def test_quadrature_convergence_for_quadratic():
    J = builtin_objective(ObjectiveId.quadratic, {"matrix": np.eye(3).tolist()})
    report = check_quadrature_convergence(J, 3, [[1.0, 0.5, -2.0]])
    assert report.passed, report.measured


def test_small_radius_limit():
    report = check_small_radius_limit(_ringed(), 3, sample_ball_points(3, 3, 3.0, seed=2))
    assert report.passed, report.measured
    assert report.measured["max_gap_a0.001"] < report.measured["max_gap_a0.1"]


def test_critical_radii_of_ringed_objective():
    report = check_critical_radii(_ringed(), 3)
    assert report.passed, report.measured
    assert report.measured["count"] == 2


# ------------------------------------------------------------------------------
# Space-filling limits
# ------------------------------------------------------------------------------
@pytest.mark.parametrize("k", [2, 3, 4])
def test_filling_bound_linear(k):
    report = check_filling_bound(lambda z: z[..., 0] + z[..., 1], math.sqrt(2.0), 2, k)
    assert report.passed, report.measured
    assert report.measured["cube"] == pytest.approx(1.0)


@pytest.mark.parametrize("k", [2, 3, 4])
def test_filling_bound_sine_product(k):
    def f(z):
        return np.sin(2 * np.pi * z[..., 0]) * np.sin(2 * np.pi * z[..., 1])

    assert check_filling_bound(f, 2 * np.pi * math.sqrt(2.0), 2, k).passed


def test_filling_bound_refuses_oversized_quadrature():
    with pytest.raises(QuadratureError):
        check_filling_bound(lambda z: z[..., 0], 1.0, 3, 8)


def test_filter_limit():
    report = check_filter_limit(3, range(1, 6))
    assert report.passed
    assert report.measured["norm_k1"] == pytest.approx(4.0 / (3.0 * math.pi))


def test_field_limit_for_constant_objective():
    J = builtin_objective(ObjectiveId.constant, {"value": 1.0})
    report = check_field_limit(J, 3, 1.0, 1.0, [[1.0, 0.0, 0.0]], [2, 3], bound=1e-6)
    assert report.passed, report.measured


def test_field_limit_requires_increasing_k():
    with pytest.raises(ValueError):
        check_field_limit(_ringed(), 3, 1.0, 1.0, [[1.0, 0.0, 0.0]], [3, 2])


def test_curve_representation():
    report = check_curve_representation(_ringed(), 3, 1.0, 1.0, [1, 2], [[0.5, 0.2, 1.0]])
    assert report.passed, report.measured


# ------------------------------------------------------------------------------
# Simulation identities
# ------------------------------------------------------------------------------
def test_zero_objective_invariance():
    report = check_zero_objective()
    assert report.passed, report.measured


def test_change_of_variables_short_horizon():
    report = check_change_of_variables(get_example("ex1_large_a"), t_final=10.0)
    assert report.passed, report.measured


def test_filter_bound_short_horizon():
    report = check_filter_bound(get_example("ex2_large_a"), t_final=10.0)
    assert report.passed, report.measured


def test_sup_deviation_vanishes_for_zero_objective():
    p = ControlParams(n=3, a=1.0, b=1.0, h=1.0, omega=1.0, k=2)
    J = builtin_objective(ObjectiveId.constant, {"value": 0.0})
    assert sup_deviation(J, p, [1.0, 1.0, 1.0], 2.0) <= 1e-12


# ------------------------------------------------------------------------------
# Registry
# ------------------------------------------------------------------------------
def test_list_checks_by_suite():
    assert len(registry.list_checks(Suite.geometry)) == 6
    assert len(registry.list_checks("examples")) == len(EXAMPLES)
    assert set(registry.list_checks("geometry")) <= set(registry.list_checks())


def test_run_check_turns_errors_into_failed_reports(monkeypatch):
    monkeypatch.setitem(registry._CHECK_REGISTRY, "boom", (Suite.simulate, _boom_divergence))
    report = registry.run_check("boom")
    assert not report.passed
    assert report.details.startswith("divseek-error: divergence:")

    monkeypatch.setitem(registry._CHECK_REGISTRY, "boom", (Suite.simulate, _boom_plain))
    report = registry.run_check("boom")
    assert not report.passed
    assert report.details == "divseek-error: error: ValueError: bad input"


def test_run_suite_geometry():
    reports = registry.run_suite(Suite.geometry)
    assert [r.name for r in reports] == registry.list_checks(Suite.geometry)
    assert all(r.passed for r in reports)


# ------------------------------------------------------------------------------
# Reproduction scenarios
# ------------------------------------------------------------------------------
@pytest.mark.slow
@pytest.mark.parametrize("example_id", sorted(EXAMPLES))
def test_examples_land_in_their_bands(example_id):
    report = check_example(example_id)
    assert report.passed, report.details


@pytest.mark.slow
def test_iss_behavior_of_large_radius_example():
    report = check_iss_behavior(get_example("ex2_large_a"))
    assert report.passed, report.measured


@pytest.mark.slow
def test_trajectory_approximation_improves():
    report = registry.run_check("trajectory_approx")
    assert report.passed, report.measured


def _flat_trajectory(transformed_radii) -> Trajectory:
    radii = np.asarray(transformed_radii, dtype=float)
    m = radii.size
    states = np.tile([0.5, 0.5, 0.5, 0.5], (m, 1))
    return Trajectory(
        times=np.linspace(0.0, 10.0 * (m - 1), m),
        states=states,
        filter_states=np.zeros(m),
        outputs=np.zeros(m),
        extras={"transformed": radii[:, None] * np.array([[1.0, 0.0, 0.0, 0.0]])},
    )


def _fake_result(traj: Trajectory) -> ScenarioResult:
    return ScenarioResult(
        scenario="ex3",
        final_time=float(traj.times[-1]),
        final_transformed_radius=float(np.linalg.norm(traj.transformed_states()[-1])),
        final_plant_radius=float(np.linalg.norm(traj.states[-1])),
        objective_gap=0.0,
        trajectory=traj,
    )


@pytest.mark.parametrize(
    "radii, expected",
    [
        ([1.7, 1.0, 0.5, 0.3, 0.2], True),
        ([1.7, 2.0, 0.5, 0.3, 0.2], True),
        ([1.7, 1.0, 0.5, 0.6, 0.2], False),
        ([1.7, 1.0, 0.5, 0.5, 0.5], False),
    ],
)
def test_flat_bump_example_requires_shrinking_transformed_radius(monkeypatch, radii, expected):
    traj = _flat_trajectory(radii)
    monkeypatch.setattr(verify, "run_example", lambda example_id: _fake_result(traj))
    report = check_example("ex3")
    assert report.passed is expected
    assert "max_transformed_rise_after_transient" in report.measured


def _iss_with_gaps(monkeypatch, gaps):
    remaining = iter(gaps)
    traj = Trajectory(
        times=np.array([0.0, 1.0]),
        states=np.full((2, 3), 3.0),
        filter_states=np.zeros(2),
        outputs=np.zeros(2),
    )
    monkeypatch.setattr(verify, "simulate_scenario", lambda cfg: traj)
    monkeypatch.setattr(
        verify,
        "summarize_run",
        lambda cfg, run: ScenarioResult(
            scenario=cfg.name,
            final_time=1.0,
            final_transformed_radius=0.0,
            final_plant_radius=0.0,
            objective_gap=next(remaining),
        ),
    )
    return check_iss_behavior(get_example("ex2_large_a"))


def test_iss_behavior_accepts_gap_growing_with_disturbance(monkeypatch):
    report = _iss_with_gaps(monkeypatch, [0.0, 3e-4, 5e-3])
    assert report.passed, report.measured


@pytest.mark.parametrize(
    "gaps",
    [
        [0.004, 0.0, 0.5],
        [0.004, 0.01, 0.05],
        [0.01, 0.005, 0.006],
    ],
)
def test_iss_behavior_rejects_unbounded_or_collapsing_gaps(monkeypatch, gaps):
    assert not _iss_with_gaps(monkeypatch, gaps).passed
