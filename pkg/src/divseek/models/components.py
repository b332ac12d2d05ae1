from __future__ import annotations

from typing import Any

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..enums import (
    DisturbanceKind,
    FieldQuantity,
    ObjectiveId,
    QuadratureMode,
    SweepAxis,
    SystemKind,
)


class _Strict(BaseModel):
    # Typos in scientific parameters must fail loudly.
    model_config = ConfigDict(extra="forbid")


# ------------------------------------------------------------------------------
# Scheme constants
# ------------------------------------------------------------------------------
class ControlParams(_Strict):
    model_config = ConfigDict(extra="forbid", frozen=True)

    n: int = Field(..., ge=2, description="State dimension")
    a: float = Field(..., gt=0, description="Dither radius (state units)")
    b: float = Field(..., gt=0, description="Probe gain")
    h: float = Field(..., gt=0, description="High-pass filter rate (1/time)")
    omega: float = Field(..., gt=0, description="Dither frequency (rad/time)")
    k: int = Field(..., ge=1, description="Frequency-stacking integer")
    filter_enabled: bool = True
    radius_decay: float = Field(default=0.0, ge=0, description="Exponential decay rate of a(t)")
    radius_floor: float | None = Field(
        default=None, gt=0, description="Limit of a(t); defaults to a"
    )

    @model_validator(mode="after")
    def _floor_not_above_radius(self) -> ControlParams:
        if self.radius_floor is not None and self.radius_floor > self.a:
            raise ValueError("radius_floor must not exceed a")
        return self


class QuadratureSpec(_Strict):
    model_config = ConfigDict(extra="forbid", frozen=True)

    angular_nodes: int = Field(default=64, ge=2)
    radial_nodes: int = Field(default=32, ge=2)
    curve_nodes: int | None = Field(
        default=None, ge=2, description="Nodes for dither-period integrals; None = minimum for k"
    )
    mode: QuadratureMode = QuadratureMode.tensor_gauss
    seed: int = Field(default=0, ge=0)
    samples: int = Field(default=200_000, ge=2, description="Monte Carlo sample count")


class DisturbanceSpec(_Strict):
    kind: DisturbanceKind = DisturbanceKind.zero
    value: float = 0.0
    amplitude: float = 0.0
    frequency: float = 0.0
    phase: float = 0.0
    bound: float | None = Field(default=None, ge=0, description="sup-norm bound delta")
    dwell: float = Field(default=1.0, gt=0, description="Hold time of piecewise_uniform values")
    seed: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _resolve_bound(self) -> DisturbanceSpec:
        if self.kind is DisturbanceKind.zero:
            natural = 0.0
        elif self.kind is DisturbanceKind.constant:
            natural = abs(self.value)
        elif self.kind is DisturbanceKind.sinusoid:
            natural = abs(self.amplitude)
        else:
            if self.bound is None:
                raise ValueError("piecewise_uniform requires bound")
            natural = self.bound
        if self.bound is None:
            self.bound = natural
        elif natural > self.bound:
            raise ValueError(f"{self.kind.value} disturbance exceeds bound {self.bound}")
        return self

    @property
    def delta(self) -> float:
        return float(self.bound or 0.0)


class IntegratorSpec(_Strict):
    dt: float | None = Field(default=None, gt=0)
    steps_per_fast_period: int = Field(default=64, ge=32)
    t_final: float | None = Field(default=None, gt=0, description="None = 100/(a b c)")
    record_stride: int = Field(default=1, ge=1)


class ObjectiveSpec(_Strict):
    id: ObjectiveId
    params: dict[str, Any] = Field(default_factory=dict)


class InitialState(_Strict):
    x: list[float] = Field(..., min_length=2)
    eta: float = 0.0


class OutputPaths(_Strict):
    trajectory: str | None = None
    summary: str | None = None


class ScenarioConfig(_Strict):
    name: str = "scenario"
    objective: ObjectiveSpec
    control: ControlParams
    disturbance: DisturbanceSpec = Field(default_factory=DisturbanceSpec)
    integrator: IntegratorSpec = Field(default_factory=IntegratorSpec)
    initial: InitialState
    system: SystemKind = SystemKind.closed_loop
    quadrature: QuadratureSpec = Field(default_factory=QuadratureSpec)
    output: OutputPaths = Field(default_factory=OutputPaths)

    @model_validator(mode="after")
    def _initial_matches_dimension(self) -> ScenarioConfig:
        if len(self.initial.x) != self.control.n:
            raise ValueError(
                f"initial.x has {len(self.initial.x)} entries but control.n = {self.control.n}"
            )
        return self


# ------------------------------------------------------------------------------
# Field grids & sweeps
# ------------------------------------------------------------------------------
class AxisGrid(_Strict):
    index: int = Field(..., ge=0)
    min: float
    max: float
    count: int = Field(..., ge=2)

    @model_validator(mode="after")
    def _ordered(self) -> AxisGrid:
        if not self.max > self.min:
            raise ValueError("max must be greater than min")
        return self


class FieldGridRequest(_Strict):
    objective: ObjectiveSpec
    dimension: int = Field(..., ge=1)
    a: float = Field(default=0.0, ge=0, description="Averaging radius; 0 means raw J")
    axes: list[AxisGrid] = Field(..., min_length=1, max_length=2)
    slice: list[float] | None = None
    quantity: FieldQuantity = FieldQuantity.value
    quadrature: QuadratureSpec = Field(default_factory=QuadratureSpec)

    @model_validator(mode="after")
    def _axes_fit_dimension(self) -> FieldGridRequest:
        idx = [ax.index for ax in self.axes]
        if len(set(idx)) != len(idx):
            raise ValueError("swept axes must be distinct")
        if max(idx) >= self.dimension:
            raise ValueError(f"axis index {max(idx)} out of range for dimension {self.dimension}")
        if self.slice is not None and len(self.slice) != self.dimension:
            raise ValueError(f"slice must have {self.dimension} entries")
        return self


class SweepSpec(_Strict):
    axis: SweepAxis
    values: list[float] = Field(..., min_length=1)
    deviation: bool = False

    @field_validator("values")
    @classmethod
    def _finite(cls, v: list[float]) -> list[float]:
        if any(x != x or x in (float("inf"), float("-inf")) for x in v):
            raise ValueError("sweep values must be finite")
        return v

    @model_validator(mode="after")
    def _values_fit_axis(self) -> SweepSpec:
        if self.axis is SweepAxis.k:
            if any(v < 1 or int(v) != v for v in self.values):
                raise ValueError("k values must be integers >= 1")
        elif self.axis is SweepAxis.delta:
            if any(v < 0 for v in self.values):
                raise ValueError("delta values must be >= 0")
        elif any(v <= 0 for v in self.values):
            raise ValueError(f"{self.axis.value} values must be > 0")
        return self


# ------------------------------------------------------------------------------
# Results
# ------------------------------------------------------------------------------
class CheckReport(BaseModel):
    name: str
    suite: str
    passed: bool
    measured: dict[str, float] = Field(default_factory=dict)
    tolerance: float
    details: str = ""


class ScenarioResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    scenario: str
    final_time: float
    final_transformed_radius: float = Field(..., ge=0)
    final_plant_radius: float = Field(..., ge=0)
    objective_gap: float
    trajectory: Any = Field(default=None, exclude=True)


class SweepRow(BaseModel):
    axis: str
    value: float
    final_transformed_radius: float | None = None
    final_plant_radius: float | None = None
    terminal_gap: float | None = None
    sup_deviation: float | None = None
    error: str | None = None

