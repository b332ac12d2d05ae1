# src/divseek/data/scenarios.py
from __future__ import annotations

from typing import Any, Dict, Tuple

from ..enums import ObjectiveId
from ..errors import ConfigError
from ..models.components import (
    ControlParams,
    InitialState,
    IntegratorSpec,
    ObjectiveSpec,
    ScenarioConfig,
)

# ------------------------------------------------------------------------------
# Reproduction scenarios (b = h = 1, no disturbance, eta(0) = 0)
# ------------------------------------------------------------------------------
def _scenario(
    name: str,
    objective: ObjectiveId,
    *,
    n: int,
    a: float,
    omega: float,
    k: int,
    x0: list[float],
    t_final: float | None = None,
) -> ScenarioConfig:
    return ScenarioConfig(
        name=name,
        objective=ObjectiveSpec(id=objective),
        control=ControlParams(n=n, a=a, b=1.0, h=1.0, omega=omega, k=k),
        integrator=IntegratorSpec(t_final=t_final),
        initial=InitialState(x=x0, eta=0.0),
    )


EXAMPLES: Dict[str, ScenarioConfig] = {
    "ex1_small_a": _scenario(
        "ex1_small_a", ObjectiveId.perturbed_decay_2d, n=2, a=0.2, omega=2.0, k=1, x0=[-3.0, 0.0]
    ),
    "ex1_large_a": _scenario(
        "ex1_large_a", ObjectiveId.perturbed_decay_2d, n=2, a=0.4, omega=2.0, k=1, x0=[-3.0, 0.0]
    ),
    "ex2_small_a": _scenario(
        "ex2_small_a", ObjectiveId.ringed_gaussian_3d, n=3, a=0.5, omega=1.0, k=2, x0=[3.0] * 3
    ),
    "ex2_large_a": _scenario(
        "ex2_large_a", ObjectiveId.ringed_gaussian_3d, n=3, a=1.0, omega=1.0, k=2, x0=[3.0] * 3
    ),
    "ex3": _scenario(
        "ex3", ObjectiveId.flat_bump_4d, n=4, a=1.0, omega=1.0, k=2, x0=[1.0] * 4, t_final=200.0
    ),
}

# (quantity, lower, upper): the final radius the run must land in.
EXAMPLE_BANDS: Dict[str, Tuple[str, float, float]] = {
    "ex1_small_a": ("transformed", 3.14, 3.44),
    "ex1_large_a": ("transformed", 0.0, 0.2),
    "ex2_small_a": ("transformed", 2.52, 2.82),
    "ex2_large_a": ("transformed", 0.0, 0.3),
    "ex3": ("plant", 0.8, 1.2),
}

# (transient, ripple): past the transient |x~| may rise by at most the ripple per record.
EXAMPLE_SHRINKING: Dict[str, Tuple[float, float]] = {
    "ex3": (20.0, 1e-4),
}


def get_example(example_id: str, **updates: Any) -> ScenarioConfig:
    """Copy of a reproduction scenario; `updates` replace top-level fields."""
    try:
        base = EXAMPLES[example_id]
    except KeyError as exc:
        raise ConfigError(
            f"unknown example '{example_id}'; expected one of {', '.join(EXAMPLES)}"
        ) from exc
    return base.model_copy(update=updates, deep=True) if updates else base.model_copy(deep=True)
