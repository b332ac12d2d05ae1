"""Fixed-step simulation of the extremum seeking loop.

Three systems share one state layout y = [x_1..x_n, eta]:
  closed_loop  plant state x under the dither feedback law and the high-pass filter,
  transformed  x~ = x - a(t) U_k(omega t), the same motion with the dither offset removed,
  averaged     the gradient flow a b c grad J_a, with eta frozen at 0.
"""
from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..enums import DisturbanceKind, SystemKind
from ..errors import ConfigError, DivergenceError, NonFiniteObjectiveError
from ..models.components import (
    ControlParams,
    DisturbanceSpec,
    IntegratorSpec,
    QuadratureSpec,
    ScenarioConfig,
)
from .geometry_dither import curve_U, dither_signals, dither_v, fastest_rate
from .objective import (
    DEFAULT_QUADRATURE,
    ObjectiveField,
    averaged_gradient,
    gradient_scale_c,
    objective_from_spec,
)

log = logging.getLogger("divseek.simulate")

FloatArray = NDArray[np.float64]
SystemRhs = Callable[[float, FloatArray], FloatArray]
VectorDisturbance = Callable[[float], FloatArray]

DIVERGENCE_LIMIT = 1e9


# ------------------------------------------------------------------------------
# States and trajectories
# ------------------------------------------------------------------------------
@dataclass(frozen=True)
class SimState:
    x: FloatArray
    eta: float = 0.0
    t: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float).reshape(-1))

    def pack(self) -> FloatArray:
        return np.append(self.x, self.eta)


@dataclass
class Trajectory:
    times: FloatArray
    states: FloatArray
    filter_states: FloatArray
    outputs: FloatArray
    params: ControlParams | None = None
    system: SystemKind = SystemKind.closed_loop
    extras: dict[str, FloatArray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        m = self.times.shape[0]
        if not (self.states.shape[0] == self.filter_states.shape[0] == self.outputs.shape[0] == m):
            raise ValueError("trajectory columns must have equal lengths")
        if m > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("trajectory times must be strictly increasing")

    def __len__(self) -> int:
        return int(self.times.shape[0])

    @property
    def final_state(self) -> SimState:
        return SimState(
            self.states[-1].copy(), float(self.filter_states[-1]), float(self.times[-1])
        )

    def plant_states(self) -> FloatArray:
        if self.system is SystemKind.transformed:
            return from_transformed(self.states, self.times, self._require_params())
        return self.states

    def transformed_states(self) -> FloatArray:
        if "transformed" in self.extras:
            return self.extras["transformed"]
        if self.system is SystemKind.closed_loop:
            return to_transformed(self.states, self.times, self._require_params())
        return self.states

    def _require_params(self) -> ControlParams:
        if self.params is None:
            raise ValueError("trajectory carries no control parameters")
        return self.params


# ------------------------------------------------------------------------------
# Disturbances
# ------------------------------------------------------------------------------
class DisturbanceSignal:
    """Realization d(t) of a DisturbanceSpec with |d(t)| <= spec.delta for all t."""

    def __init__(self, spec: DisturbanceSpec) -> None:
        self.spec = spec
        self._held = lru_cache(maxsize=4096)(self._draw)

    @property
    def delta(self) -> float:
        return self.spec.delta

    def __call__(self, t: float) -> float:
        s = self.spec
        if s.kind is DisturbanceKind.zero:
            return 0.0
        if s.kind is DisturbanceKind.constant:
            return s.value
        if s.kind is DisturbanceKind.sinusoid:
            return s.amplitude * math.sin(s.frequency * t + s.phase)
        return self._held(math.floor(t / s.dwell))

    def _draw(self, index: int) -> float:
        # Philox is counter based: the value of hold interval `index` depends on (seed, index) only.
        gen = np.random.Generator(np.random.Philox(key=self.spec.seed, counter=index % 2**256))
        return self.spec.delta * (2.0 * float(gen.random()) - 1.0)


def realize_disturbance(spec: DisturbanceSpec | None) -> DisturbanceSignal:
    return DisturbanceSignal(spec if spec is not None else DisturbanceSpec())


def projected_disturbance(signal: DisturbanceSignal, p: ControlParams) -> VectorDisturbance:
    """d(t) v_k(omega t), the vector disturbance seen by the averaged flow."""
    return lambda t: signal(t) * dither_v(p.omega * t, p.k, p.n)


# ------------------------------------------------------------------------------
# Radius schedule
# ------------------------------------------------------------------------------
def radius_at(p: ControlParams, t: ArrayLike) -> FloatArray | float:
    floor = p.radius_floor if p.radius_floor is not None else p.a
    if p.radius_decay == 0.0:
        return p.a if np.ndim(t) == 0 else np.full(np.shape(t), p.a)
    return floor + (p.a - floor) * np.exp(-p.radius_decay * np.asarray(t, dtype=float))


def radius_rate_at(p: ControlParams, t: float) -> float:
    if p.radius_decay == 0.0:
        return 0.0
    floor = p.radius_floor if p.radius_floor is not None else p.a
    return -p.radius_decay * (p.a - floor) * math.exp(-p.radius_decay * t)


# ------------------------------------------------------------------------------
# Change of variables
# ------------------------------------------------------------------------------
def to_transformed(x: ArrayLike, t: ArrayLike, p: ControlParams) -> FloatArray:
    """x~ = x - a U_k(omega t); broadcasts over a column of times."""
    tt = np.asarray(t, dtype=float)
    offset = np.asarray(radius_at(p, tt))[..., None] * curve_U(p.omega * tt, p.k, p.n)
    return np.asarray(x, dtype=float) - offset


def from_transformed(x_t: ArrayLike, t: ArrayLike, p: ControlParams) -> FloatArray:
    tt = np.asarray(t, dtype=float)
    offset = np.asarray(radius_at(p, tt))[..., None] * curve_U(p.omega * tt, p.k, p.n)
    return np.asarray(x_t, dtype=float) + offset


# ------------------------------------------------------------------------------
# Output, control law and right-hand sides
# ------------------------------------------------------------------------------
def _objective_at(J: ObjectiveField, x: FloatArray, t: float) -> float:
    y = J.value(x)
    if not math.isfinite(y):
        raise NonFiniteObjectiveError(f"objective {J.name} is not finite at t={t}", {"t": t})
    return y


def measured_output(J: ObjectiveField, x: ArrayLike, dist: DisturbanceSignal, t: float) -> float:
    return J.value(x) + dist(t)


def control_input(p: ControlParams, t: float, y_hat: float, eta: float) -> FloatArray:
    U, u, v = dither_signals(p.omega * t, p.k, p.n)
    e = y_hat - (eta if p.filter_enabled else 0.0)
    a_t = radius_at(p, t)
    return a_t * p.omega * u + radius_rate_at(p, t) * U + e * p.b * v


def closed_loop_rhs(
    s: SimState, t: float, J: ObjectiveField, p: ControlParams, dist: DisturbanceSignal
) -> tuple[FloatArray, float]:
    y_hat = _objective_at(J, s.x, t) + dist(t)
    eta = s.eta if p.filter_enabled else 0.0
    dx = control_input(p, t, y_hat, eta)
    deta = -p.h * eta + p.h * y_hat if p.filter_enabled else 0.0
    return dx, deta


def transformed_rhs(
    s: SimState, t: float, J: ObjectiveField, p: ControlParams, dist: DisturbanceSignal
) -> tuple[FloatArray, float]:
    U, _, v = dither_signals(p.omega * t, p.k, p.n)
    y = _objective_at(J, s.x + radius_at(p, t) * U, t)
    d = dist(t)
    eta = s.eta if p.filter_enabled else 0.0
    dx = (y - eta + d) * p.b * v
    deta = -p.h * eta + p.h * y + p.h * d if p.filter_enabled else 0.0
    return dx, deta


def averaged_flow_rhs(
    x_bar: ArrayLike,
    t: float,
    J: ObjectiveField,
    p: ControlParams,
    dist_vec: VectorDisturbance | None = None,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> FloatArray:
    """a b c grad J_a(x_bar) + b d_bar(t)."""
    xb = np.asarray(x_bar, dtype=float)
    a_t = float(radius_at(p, t))
    out = a_t * p.b * gradient_scale_c(p.n) * averaged_gradient(J, xb, a_t, quad)
    if dist_vec is not None:
        out = out + p.b * np.asarray(dist_vec(t), dtype=float)
    return out


def make_system(
    kind: SystemKind,
    J: ObjectiveField,
    p: ControlParams,
    dist: DisturbanceSignal,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> tuple[SystemRhs, Callable[[float, FloatArray], float]]:
    """Flat right-hand side f(t, y) over y = [x, eta] and the matching output map y_hat(t, y)."""
    if kind is SystemKind.closed_loop:

        def rhs(t: float, y: FloatArray) -> FloatArray:
            dx, deta = closed_loop_rhs(SimState(y[:-1], float(y[-1]), t), t, J, p, dist)
            return np.append(dx, deta)

        def output(t: float, y: FloatArray) -> float:
            return measured_output(J, y[:-1], dist, t)

    elif kind is SystemKind.transformed:

        def rhs(t: float, y: FloatArray) -> FloatArray:
            dx, deta = transformed_rhs(SimState(y[:-1], float(y[-1]), t), t, J, p, dist)
            return np.append(dx, deta)

        def output(t: float, y: FloatArray) -> float:
            return measured_output(J, from_transformed(y[:-1], t, p), dist, t)

    else:
        dist_vec = (
            None if dist.spec.kind is DisturbanceKind.zero else projected_disturbance(dist, p)
        )

        def rhs(t: float, y: FloatArray) -> FloatArray:
            return np.append(averaged_flow_rhs(y[:-1], t, J, p, dist_vec, quad), 0.0)

        def output(t: float, y: FloatArray) -> float:
            return measured_output(J, y[:-1], dist, t)

    return rhs, output


# ------------------------------------------------------------------------------
# Integration
# ------------------------------------------------------------------------------
def default_step(p: ControlParams, steps_per_fast_period: int = 64) -> float:
    """dt resolving the fastest dither component omega * 2^((n-2)k-1)."""
    return 2.0 * math.pi / (p.omega * fastest_rate(p.k, p.n) * steps_per_fast_period)


def default_horizon(p: ControlParams) -> float:
    return 100.0 / (p.a * p.b * gradient_scale_c(p.n))


def _guard(y: FloatArray, t: float) -> None:
    if not np.all(np.isfinite(y)):
        raise DivergenceError(f"non-finite state at t={t:.6g}", t)
    peak = float(np.max(np.abs(y)))
    if peak > DIVERGENCE_LIMIT:
        raise DivergenceError(
            f"state component {peak:.3g} exceeds {DIVERGENCE_LIMIT:g} at t={t:.6g}", t
        )


def integrate(
    rhs: SystemRhs,
    initial: SimState,
    spec: IntegratorSpec,
    *,
    params: ControlParams | None = None,
    output: Callable[[float, FloatArray], float] | None = None,
    system: SystemKind = SystemKind.closed_loop,
) -> Trajectory:
    """Classical RK4 with a fixed step; records every `record_stride`-th step plus the endpoints."""
    if spec.t_final is None:
        raise ConfigError("integrator.t_final must be resolved before integrating")
    if spec.dt is not None:
        dt_target = spec.dt
    elif params is not None:
        dt_target = default_step(params, spec.steps_per_fast_period)
    else:
        raise ConfigError("integrator.dt is required when no control parameters are given")

    n_steps = max(1, math.ceil(spec.t_final / dt_target - 1e-9))
    dt = spec.t_final / n_steps
    t0 = initial.t
    y = initial.pack()
    log.info("[sim] %s steps=%d dt=%.4g t_final=%g", system.value, n_steps, dt, spec.t_final)

    def _out(t: float, yy: FloatArray) -> float:
        return output(t, yy) if output is not None else math.nan

    times = [t0]
    rows = [y.copy()]
    outs = [_out(t0, y)]
    half = 0.5 * dt
    for i in range(1, n_steps + 1):
        t = t0 + (i - 1) * dt
        k1 = rhs(t, y)
        k2 = rhs(t + half, y + half * k1)
        k3 = rhs(t + half, y + half * k2)
        k4 = rhs(t + dt, y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t_next = t0 + i * dt
        _guard(y, t_next)
        if i % spec.record_stride == 0 or i == n_steps:
            times.append(t_next)
            rows.append(y.copy())
            outs.append(_out(t_next, y))

    data = np.asarray(rows)
    log.debug("[sim] %s done, %d records", system.value, len(times))
    return Trajectory(
        times=np.asarray(times),
        states=data[:, :-1],
        filter_states=data[:, -1],
        outputs=np.asarray(outs),
        params=params,
        system=system,
    )


def resolve_integrator(config: ScenarioConfig) -> IntegratorSpec:
    spec = config.integrator
    if spec.t_final is None:
        spec = spec.model_copy(update={"t_final": default_horizon(config.control)})
    return spec


def initial_state(config: ScenarioConfig) -> SimState:
    """Initial data for the configured system; x(0) in the config is always the plant state."""
    p = config.control
    x0 = np.asarray(config.initial.x, dtype=float)
    # eta is carried but frozen at 0 without the filter, and the averaged flow has none
    eta0 = config.initial.eta if p.filter_enabled else 0.0
    if config.system is SystemKind.closed_loop:
        return SimState(x0, eta0)
    x_t0 = to_transformed(x0, 0.0, p)
    return SimState(x_t0, eta0 if config.system is SystemKind.transformed else 0.0)


def simulate_scenario(config: ScenarioConfig) -> Trajectory:
    J = objective_from_spec(config.objective)
    J.check_dimension(config.control.n)
    dist = realize_disturbance(config.disturbance)
    rhs, output = make_system(config.system, J, config.control, dist, config.quadrature)
    log.info("[sim] scenario=%s system=%s", config.name, config.system.value)
    return integrate(
        rhs,
        initial_state(config),
        resolve_integrator(config),
        params=config.control,
        output=output,
        system=config.system,
    )
