# src/divseek/registry.py
from __future__ import annotations

import logging
from typing import Callable, Dict, List, Tuple

import numpy as np

from .data.scenarios import EXAMPLES, get_example
from .enums import DisturbanceKind, ObjectiveId, Suite
from .errors import DivseekError
from .models.components import CheckReport, DisturbanceSpec, QuadratureSpec
from .tools.objective import DEFAULT_QUADRATURE, ObjectiveField, builtin_objective
from .tools.verify import (
    check_assumption_probe,
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
    check_trajectory_approx,
    check_unit_norm,
    check_zero_objective,
    sample_ball_points,
)

log = logging.getLogger("divseek.registry")

CheckFn = Callable[[], CheckReport]

# =============================================================================
# Public registry used by `divseek verify`
# =============================================================================
_CHECK_REGISTRY: Dict[str, Tuple[Suite, CheckFn]] = {}


def _register_check(name: str, suite: Suite, fn: CheckFn) -> None:
    log.debug("[registry] registering check '%s' (suite=%s)", name, suite.value)
    _CHECK_REGISTRY[name] = (suite, fn)


# --------------------- Geometry ---------------------------------------------
_register_check("unit_norm", Suite.geometry, check_unit_norm)
_register_check("periodicity", Suite.geometry, check_periodicity)
_register_check("tangency", Suite.geometry, check_tangency)
_register_check("gram_consistency", Suite.geometry, check_gram_consistency)
_register_check("jacobian_fd", Suite.geometry, check_jacobian_fd)
_register_check("partition_correspondence", Suite.geometry, check_partition_correspondence)

# --------------------- Ball averages ----------------------------------------
# the 4-D tensor rule is cut down so the finite-difference side stays affordable
_COARSE_4D = QuadratureSpec(angular_nodes=20, radial_nodes=16)
_FINE_2D = QuadratureSpec(angular_nodes=256, radial_nodes=96)

# (objective, n, averaging radii, quadrature, keep points this far outside the origin's ball)
_IDENTITY_CASES = [
    (ObjectiveId.ringed_gaussian_3d, 3, (0.5, 1.0), DEFAULT_QUADRATURE, False),
    (ObjectiveId.perturbed_decay_2d, 2, (0.4, 0.5, 1.0), _FINE_2D, True),
    (ObjectiveId.flat_bump_4d, 4, (0.5, 1.0), _COARSE_4D, False),
]


def _identity_check(
    oid: ObjectiveId, n: int, a: float, quad: QuadratureSpec, clear: bool
) -> CheckFn:
    def run() -> CheckReport:
        # the ripple term has a cone point at 0; its ball average is smooth only away from it
        min_radius = a + 0.05 if clear else 0.0
        points = sample_ball_points(n, 20, 4.0, seed=n, min_radius=min_radius)
        return check_divergence_identity(builtin_objective(oid), n, a, points, 1e-3, quad)

    return run


for _oid, _n, _radii, _quad, _clear in _IDENTITY_CASES:
    for _a in _radii:
        _register_check(
            f"divergence_identity:{_oid.value}:a={_a:g}",
            Suite.objective,
            _identity_check(_oid, _n, _a, _quad, _clear),
        )


def _ringed() -> ObjectiveField:
    return builtin_objective(ObjectiveId.ringed_gaussian_3d)


_register_check(
    "rescaling_identity",
    Suite.objective,
    lambda: check_rescaling_identity(_ringed(), 3, 1.0, sample_ball_points(3, 5, 4.0, seed=11)),
)
_register_check("assumption_probe", Suite.objective, lambda: check_assumption_probe(_ringed(), 3))
_register_check("critical_radii", Suite.objective, lambda: check_critical_radii(_ringed(), 3))
_register_check(
    "quadrature_convergence",
    Suite.objective,
    lambda: check_quadrature_convergence(_ringed(), 3, sample_ball_points(3, 5, 3.0, seed=13)),
)


def _small_radius_check(oid: ObjectiveId, n: int, quad: QuadratureSpec) -> CheckFn:
    return lambda: check_small_radius_limit(
        builtin_objective(oid), n, sample_ball_points(n, 5, 4.0, seed=17), quad=quad
    )


for _oid, _n, _, _quad, _ in _IDENTITY_CASES:
    _register_check(
        f"small_radius_limit:{_oid.value}", Suite.objective, _small_radius_check(_oid, _n, _quad)
    )


# --------------------- Space-filling limits ---------------------------------
def _linear_sum(z: np.ndarray) -> np.ndarray:
    return z[..., 0] + z[..., 1]


def _sine_product(z: np.ndarray) -> np.ndarray:
    return np.sin(2.0 * np.pi * z[..., 0]) * np.sin(2.0 * np.pi * z[..., 1])


for _k in (2, 3, 4):
    _register_check(
        f"filling_bound:linear:k={_k}",
        Suite.filling,
        lambda k=_k: check_filling_bound(_linear_sum, np.sqrt(2.0), 2, k, name="linear"),
    )
    _register_check(
        f"filling_bound:sine:k={_k}",
        Suite.filling,
        lambda k=_k: check_filling_bound(
            _sine_product, 2.0 * np.pi * np.sqrt(2.0), 2, k, name="sine"
        ),
    )

_register_check(
    "field_limit",
    Suite.filling,
    lambda: check_field_limit(
        _ringed(), 3, 1.0, 1.0, sample_ball_points(3, 5, 3.0, seed=5), range(1, 6), bound=5e-3
    ),
)
_register_check(
    "filter_limit", Suite.filling, lambda: check_filter_limit(3, range(1, 6), bound=1e-2)
)
_register_check(
    "curve_representation",
    Suite.filling,
    lambda: check_curve_representation(
        _ringed(), 3, 1.0, 1.0, (1, 2, 3), sample_ball_points(3, 3, 3.0, seed=7)
    ),
)

# --------------------- Simulation identities --------------------------------
_register_check(
    "change_of_variables:ex2_large_a",
    Suite.simulate,
    lambda: check_change_of_variables(get_example("ex2_large_a")),
)
_register_check(
    "change_of_variables:ex1_large_a",
    Suite.simulate,
    lambda: check_change_of_variables(get_example("ex1_large_a")),
)
_register_check("zero_objective", Suite.simulate, check_zero_objective)
_register_check(
    "filter_bound",
    Suite.simulate,
    lambda: check_filter_bound(
        get_example(
            "ex2_large_a",
            disturbance=DisturbanceSpec(kind=DisturbanceKind.piecewise_uniform, bound=0.05, seed=3),
        )
    ),
)

# --------------------- Averaging approximation ------------------------------
def _trajectory_approx() -> CheckReport:
    cfg = get_example("ex2_large_a")
    return check_trajectory_approx(
        _ringed(), cfg.control, [3.0, 3.0, 3.0], 30.0, (1.0, 5.0, 20.0), (2, 3, 4), eps=0.1
    )


_register_check("trajectory_approx", Suite.approx, _trajectory_approx)

# --------------------- Reproduction scenarios -------------------------------
for _example in EXAMPLES:
    _register_check(f"example:{_example}", Suite.examples, lambda e=_example: check_example(e))

_register_check(
    "iss_behavior", Suite.iss, lambda: check_iss_behavior(get_example("ex2_large_a"))
)

log.debug(
    "[registry] %d checks registered: %s", len(_CHECK_REGISTRY), ", ".join(sorted(_CHECK_REGISTRY))
)


def list_checks(suite: Suite | str = Suite.all) -> List[str]:
    selected = Suite(suite)
    return [
        name
        for name, (owner, _) in _CHECK_REGISTRY.items()
        if selected is Suite.all or owner is selected
    ]


def run_check(name: str) -> CheckReport:
    """Run one registered check; an exception becomes a failed report carrying its code."""
    suite, fn = _CHECK_REGISTRY[name]
    log.debug("[invoke] check=%s", name)
    try:
        return fn()
    except DivseekError as exc:
        log.warning("[check:%s] %s", name, exc.to_line())
        return CheckReport(
            name=name, suite=suite.value, passed=False, tolerance=0.0, details=exc.to_line()
        )
    except Exception as exc:  # noqa: BLE001
        log.exception("[check:%s] crashed", name)
        return CheckReport(
            name=name,
            suite=suite.value,
            passed=False,
            tolerance=0.0,
            details=f"divseek-error: error: {type(exc).__name__}: {exc}",
        )


def run_suite(suite: Suite | str = Suite.all) -> List[CheckReport]:
    names = list_checks(suite)
    log.info("[registry] running %d checks (suite=%s)", len(names), Suite(suite).value)
    return [run_check(name) for name in names]
