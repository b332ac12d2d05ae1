"""Objective catalog, ball averages and the averaged dither fields.

The ball average of J over radius a and its gradient are evaluated by deterministic tensor
rules: Gauss-Legendre in r with weight r^(n-1), a periodic midpoint rule in the azimuth and
Gauss-Legendre in the polar angles on (0, pi), where the Gram weight is smooth.
"""
from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from scipy.optimize import brentq
from scipy.special import gamma, roots_legendre

from ..enums import FieldQuantity, ObjectiveId, QuadratureMode
from ..errors import ConfigError, QuadratureError
from ..models.components import FieldGridRequest, ObjectiveSpec, QuadratureSpec
from ..util.schema import format_validation_error
from .geometry_dither import (
    angle_path,
    filling_curve,
    gram_sqrt,
    sphere_param,
)

log = logging.getLogger("divseek.objective")

FloatArray = NDArray[np.float64]
ScalarField = Callable[[FloatArray], FloatArray]
VectorField = Callable[[FloatArray], FloatArray]

DEFAULT_QUADRATURE = QuadratureSpec()

# J(0) = 1 branch of the flat bump
_ORIGIN_RADIUS = 1e-150


@dataclass(frozen=True)
class ObjectiveField:
    """Black-box scalar field. `evaluate` maps (..., n) arrays to (...) arrays."""

    name: str
    evaluate: ScalarField
    analytic_gradient: VectorField | None = None
    dimension: int | None = None
    params: dict[str, Any] = field(default_factory=dict)

    def __call__(self, x: ArrayLike) -> FloatArray:
        return self.evaluate(np.asarray(x, dtype=float))

    def value(self, x: ArrayLike) -> float:
        return float(self(x))

    def gradient(self, x: ArrayLike, h: float = 1e-6) -> FloatArray:
        xx = np.asarray(x, dtype=float)
        if self.analytic_gradient is not None:
            return np.asarray(self.analytic_gradient(xx), dtype=float)
        return fd_gradient(self.value, xx, h)

    def check_dimension(self, n: int) -> None:
        if self.dimension is not None and self.dimension != n:
            raise ConfigError(
                f"objective {self.name} is defined for n={self.dimension}, got n={n}",
                {"objective": self.name},
            )


# ------------------------------------------------------------------------------
# Built-in catalog
# ------------------------------------------------------------------------------
class _Params(BaseModel):
    model_config = ConfigDict(extra="forbid")


class _RadialParams(_Params):
    dimension: int | None = Field(default=None, ge=1)


class _DecayParams(_RadialParams):
    amplitude: float = 0.1
    wavenumber: float = 10.0


class _BumpParams(_RadialParams):
    scale: float = Field(default=4.0, gt=0)


class _QuadraticParams(_Params):
    matrix: list[list[float]]

    @field_validator("matrix")
    @classmethod
    def _symmetric(cls, v: list[list[float]]) -> list[list[float]]:
        q = np.asarray(v, dtype=float)
        if q.ndim != 2 or q.shape[0] != q.shape[1] or q.shape[0] < 1:
            raise ValueError("matrix must be square")
        if not np.allclose(q, q.T):
            raise ValueError("matrix must be symmetric")
        return v


class _LinearParams(_Params):
    weights: list[float] = Field(..., min_length=1)
    offset: float = 0.0


class _ConstantParams(_Params):
    value: float
    dimension: int | None = Field(default=None, ge=1)


def _sq(x: FloatArray) -> FloatArray:
    return np.sum(x * x, axis=-1)


def _ringed(x: FloatArray) -> FloatArray:
    r2 = _sq(x)
    return 2.0 * np.exp(-r2 / 9.0) - np.exp(-0.5 * (r2 - 4.0) ** 2)


def _ringed_grad(x: FloatArray) -> FloatArray:
    r2 = _sq(x)
    q = r2 - 4.0
    coef = -(4.0 / 9.0) * np.exp(-r2 / 9.0) + 2.0 * q * np.exp(-0.5 * q * q)
    return coef[..., None] * x


def _ringed_verbatim(x: FloatArray) -> FloatArray:
    r2 = _sq(x)
    return 2.0 * np.exp(-r2 / 9.0) - np.exp(-0.5 * (r2 - 4.0))


def _ringed_verbatim_grad(x: FloatArray) -> FloatArray:
    r2 = _sq(x)
    coef = -(4.0 / 9.0) * np.exp(-r2 / 9.0) + np.exp(-0.5 * (r2 - 4.0))
    return coef[..., None] * x


def _decay(amplitude: float, wavenumber: float) -> tuple[ScalarField, VectorField]:
    def evaluate(x: FloatArray) -> FloatArray:
        r2 = _sq(x)
        return 1.0 / (1.0 + r2) + amplitude * np.sin(wavenumber * np.sqrt(r2))

    def grad(x: FloatArray) -> FloatArray:
        r2 = _sq(x)
        r = np.sqrt(r2)
        # the ripple term has a cone point at the origin; its subgradient 0 is used there
        ripple = np.divide(
            amplitude * wavenumber * np.cos(wavenumber * r), r, out=np.zeros_like(r), where=r > 0
        )
        return (-2.0 / (1.0 + r2) ** 2 + ripple)[..., None] * x

    return evaluate, grad


def _bump(scale: float) -> tuple[ScalarField, VectorField]:
    def evaluate(x: FloatArray) -> FloatArray:
        r2 = _sq(x)
        at_origin = r2 < _ORIGIN_RADIUS**2
        safe = np.where(at_origin, 1.0, r2)
        return np.where(at_origin, 1.0, 1.0 - np.exp(-scale / safe))

    def grad(x: FloatArray) -> FloatArray:
        r2 = _sq(x)
        at_origin = r2 < _ORIGIN_RADIUS**2
        safe = np.where(at_origin, 1.0, r2)
        decay = np.exp(-scale / safe)
        # once decay underflows the gradient is exactly flat
        live = ~at_origin & (decay > 0.0)
        coef = np.divide(-2.0 * scale * decay, safe * safe, out=np.zeros_like(safe), where=live)
        return coef[..., None] * x

    return evaluate, grad


def _validated(model: type[_Params], params: dict[str, Any], objective: str) -> Any:
    try:
        return model.model_validate(params)
    except ValidationError as exc:
        raise ConfigError(
            format_validation_error(exc, prefix="objective.params"), {"objective": objective}
        ) from exc


def builtin_objective(
    objective_id: ObjectiveId | str, params: dict[str, Any] | None = None
) -> ObjectiveField:
    """Build a catalog objective. Radial objectives work in any dimension unless one is pinned."""
    try:
        oid = ObjectiveId(objective_id)
    except ValueError as exc:
        raise ConfigError(f"unknown objective id '{objective_id}'") from exc
    raw = dict(params or {})
    log.debug("[objective] building %s params=%s", oid.value, raw)

    if oid is ObjectiveId.ringed_gaussian_3d:
        p = _validated(_RadialParams, raw, oid.value)
        return ObjectiveField(oid.value, _ringed, _ringed_grad, p.dimension, raw)
    if oid is ObjectiveId.ringed_gaussian_3d_verbatim:
        p = _validated(_RadialParams, raw, oid.value)
        return ObjectiveField(oid.value, _ringed_verbatim, _ringed_verbatim_grad, p.dimension, raw)
    if oid is ObjectiveId.perturbed_decay_2d:
        p = _validated(_DecayParams, raw, oid.value)
        evaluate, grad = _decay(p.amplitude, p.wavenumber)
        return ObjectiveField(oid.value, evaluate, grad, p.dimension, raw)
    if oid is ObjectiveId.flat_bump_4d:
        p = _validated(_BumpParams, raw, oid.value)
        evaluate, grad = _bump(p.scale)
        return ObjectiveField(oid.value, evaluate, grad, p.dimension, raw)
    if oid is ObjectiveId.quadratic:
        p = _validated(_QuadraticParams, raw, oid.value)
        q = np.asarray(p.matrix, dtype=float)
        return ObjectiveField(
            oid.value,
            lambda x: np.einsum("...i,ij,...j->...", x, q, x),
            lambda x: 2.0 * x @ q,
            q.shape[0],
            raw,
        )
    if oid is ObjectiveId.linear:
        p = _validated(_LinearParams, raw, oid.value)
        w = np.asarray(p.weights, dtype=float)
        return ObjectiveField(
            oid.value,
            lambda x: x @ w + p.offset,
            lambda x: np.broadcast_to(w, np.shape(x)).copy(),
            w.size,
            raw,
        )
    p = _validated(_ConstantParams, raw, oid.value)
    return ObjectiveField(
        oid.value,
        lambda x: np.full(np.shape(x)[:-1], p.value),
        lambda x: np.zeros(np.shape(x)),
        p.dimension,
        raw,
    )


def objective_from_spec(spec: ObjectiveSpec) -> ObjectiveField:
    return builtin_objective(spec.id, spec.params)


# ------------------------------------------------------------------------------
# Constants
# ------------------------------------------------------------------------------
def ball_volume(n: int) -> float:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return float(np.pi ** (n / 2.0) / gamma(n / 2.0 + 1.0))


def gradient_scale_c(n: int) -> float:
    """vol(B) / (2 pi^(n-1)), the factor between the limit field and a b grad J_a."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    return ball_volume(n) / (2.0 * np.pi ** (n - 1))


# ------------------------------------------------------------------------------
# Quadrature rules
# ------------------------------------------------------------------------------
def _frozen(*arrays: FloatArray) -> tuple[FloatArray, ...]:
    for arr in arrays:
        arr.setflags(write=False)
    return arrays


def _gauss_on(lo: float, hi: float, nodes: int) -> tuple[FloatArray, FloatArray]:
    x, w = roots_legendre(nodes)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


def _tensor(axes: list[tuple[FloatArray, FloatArray]]) -> tuple[FloatArray, FloatArray]:
    nodes = np.meshgrid(*[a[0] for a in axes], indexing="ij")
    weights = np.meshgrid(*[a[1] for a in axes], indexing="ij")
    pts = np.stack([g.ravel() for g in nodes], axis=-1)
    return pts, np.prod(np.stack([g.ravel() for g in weights], axis=-1), axis=-1)


@lru_cache(maxsize=32)
def sphere_rule(n: int, angular_nodes: int) -> tuple[FloatArray, FloatArray]:
    """Nodes on the unit sphere and weights (Gram factor included) summing to its area."""
    if n < 2 or angular_nodes < 2:
        raise QuadratureError(f"invalid sphere rule n={n}, angular_nodes={angular_nodes}")
    azimuth = (np.arange(angular_nodes) + 0.5) * (2.0 * np.pi / angular_nodes)
    axes = [(azimuth, np.full(angular_nodes, 2.0 * np.pi / angular_nodes))]
    axes += [_gauss_on(0.0, np.pi, angular_nodes)] * (n - 2)
    theta, w = _tensor(axes)
    log.debug("[quad] sphere rule n=%d nodes=%d", n, w.size)
    return _frozen(sphere_param(theta), w * gram_sqrt(theta))


@lru_cache(maxsize=32)
def ball_rule(n: int, radial_nodes: int) -> tuple[FloatArray, FloatArray]:
    """Radii and radial weights r^(n-1) w on [0, 1]; combine with sphere_rule."""
    if radial_nodes < 2:
        raise QuadratureError(f"radial_nodes must be >= 2, got {radial_nodes}")
    r, w = _gauss_on(0.0, 1.0, radial_nodes)
    return _frozen(r, w * r ** (n - 1))


@lru_cache(maxsize=16)
def cube_rule(d: int, nodes: int) -> tuple[FloatArray, FloatArray]:
    """Tensor Gauss-Legendre rule on [0, 1]^d."""
    if d < 1 or nodes < 2:
        raise QuadratureError(f"invalid cube rule d={d}, nodes={nodes}")
    return _frozen(*_tensor([_gauss_on(0.0, 1.0, nodes)] * d))


def required_curve_nodes(k: int, n: int) -> int:
    """256 samples per period of the slowest angle, 512 per period of the fastest."""
    return 256 * 2 ** ((n - 2) * k)


def _curve_node_count(k: int, n: int, quad: QuadratureSpec) -> int:
    required = required_curve_nodes(k, n)
    nodes = quad.curve_nodes if quad.curve_nodes is not None else required
    if nodes < required:
        raise QuadratureError(
            f"curve_nodes={nodes} cannot resolve k={k} in n={n}; need >= {required}",
            {"required": required},
        )
    return nodes


@lru_cache(maxsize=16)
def _curve_samples(k: int, n: int, nodes: int) -> tuple[FloatArray, FloatArray]:
    tau = np.arange(nodes) * (2.0 * np.pi / nodes)
    th = angle_path(tau, k, n)
    U = sphere_param(th)
    return _frozen(U, gram_sqrt(th)[:, None] * U)


def _call_rng(seed: int, tag: int, *values: ArrayLike) -> np.random.Generator:
    # Keyed on the call arguments so results do not depend on call order.
    flat = np.concatenate([np.atleast_1d(np.asarray(v, dtype=np.float64)) for v in values])
    words = np.frombuffer(flat.tobytes(), dtype=np.uint32).tolist()
    return np.random.default_rng(np.random.SeedSequence([seed, tag, *words]))


def _ball_samples(rng: np.random.Generator, n: int, count: int) -> FloatArray:
    out: list[FloatArray] = []
    have = 0
    while have < count:
        batch = rng.uniform(-1.0, 1.0, size=(max(2 * (count - have), 1024), n))
        batch = batch[_sq(batch) <= 1.0]
        out.append(batch)
        have += batch.shape[0]
    return np.concatenate(out)[:count]


def _check_radius(a: float) -> None:
    if not a > 0:
        raise ValueError(f"averaging radius must be > 0, got {a}")


# ------------------------------------------------------------------------------
# Ball average and its gradient
# ------------------------------------------------------------------------------
def averaged_objective(
    J: ObjectiveField, x: ArrayLike, a: float, quad: QuadratureSpec = DEFAULT_QUADRATURE
) -> float:
    """Mean of J over the closed ball of radius a centered at x."""
    _check_radius(a)
    xx = np.asarray(x, dtype=float)
    n = xx.size
    if quad.mode is QuadratureMode.monte_carlo:
        rng = _call_rng(quad.seed, 1, xx, a)
        return float(np.mean(J(xx + a * _ball_samples(rng, n, quad.samples))))

    S, W = sphere_rule(n, quad.angular_nodes)
    radii, radial_w = ball_rule(n, quad.radial_nodes)
    total = 0.0
    for r, wr in zip(radii, radial_w, strict=True):
        total += wr * float(W @ J(xx + (a * r) * S))
    return total / ball_volume(n)


def averaged_gradient(
    J: ObjectiveField, x: ArrayLike, a: float, quad: QuadratureSpec = DEFAULT_QUADRATURE
) -> FloatArray:
    """Gradient of the ball average as a surface integral (divergence theorem)."""
    _check_radius(a)
    xx = np.asarray(x, dtype=float)
    n = xx.size
    if quad.mode is QuadratureMode.monte_carlo:
        rng = _call_rng(quad.seed, 2, xx, a)
        s = rng.standard_normal((quad.samples, n))
        s /= np.linalg.norm(s, axis=1, keepdims=True)
        return (n / a) * np.mean(J(xx + a * s)[:, None] * s, axis=0)

    S, W = sphere_rule(n, quad.angular_nodes)
    return ((W * J(xx + a * S)) @ S) / (a * ball_volume(n))


def sampled_modulus(
    J: ObjectiveField, x: ArrayLike, a: float, quad: QuadratureSpec = DEFAULT_QUADRATURE
) -> float:
    """max |J(x + a xi) - J(x)| over the ball-rule nodes: a sampled modulus of continuity."""
    _check_radius(a)
    xx = np.asarray(x, dtype=float)
    S, _ = sphere_rule(xx.size, quad.angular_nodes)
    radii, _ = ball_rule(xx.size, quad.radial_nodes)
    j0 = J.value(xx)
    worst = max(float(np.max(np.abs(J(xx + (a * r) * S) - j0))) for r in np.append(radii, 1.0))
    return worst


# ------------------------------------------------------------------------------
# Averaged dither fields
# ------------------------------------------------------------------------------
def field_Fk(
    J: ObjectiveField,
    x_t: ArrayLike,
    a: float,
    b: float,
    k: int,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> FloatArray:
    """Period average of J(x~ + a U_k) b v_k: the vector field the transformed state follows."""
    xx = np.asarray(x_t, dtype=float)
    n = xx.size
    U, gU = _curve_samples(k, n, _curve_node_count(k, n, quad))
    return b * np.mean(J(xx + a * U)[:, None] * gU, axis=0)


def filter_Ek(
    eta: float, b: float, k: int, n: int, quad: QuadratureSpec = DEFAULT_QUADRATURE
) -> FloatArray:
    """Period average of the filter term -eta b v_k."""
    _, gU = _curve_samples(k, n, _curve_node_count(k, n, quad))
    return -b * eta * np.mean(gU, axis=0)


def curve_field(
    J: ObjectiveField,
    x_t: ArrayLike,
    a: float,
    b: float,
    k: int,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> FloatArray:
    """field_Fk along the sawtooth curve: b * int_0^1 of the integrand at 2 Theta(gamma_k)."""
    xx = np.asarray(x_t, dtype=float)
    n = xx.size
    nodes = 2 * _curve_node_count(k, n, quad)
    sigma = np.arange(nodes) / nodes
    z = filling_curve(sigma, k, n - 1)
    th = 2.0 * np.pi * z
    th[:, 0] *= 2.0
    S = sphere_param(th)
    return b * np.mean((J(xx + a * S) * gram_sqrt(th))[:, None] * S, axis=0)


def cube_surface_integral(
    J: ObjectiveField, x: ArrayLike, a: float, quad: QuadratureSpec = DEFAULT_QUADRATURE
) -> FloatArray:
    """Integral over [0,1]^(n-1) of J(x + a phi(2 Theta(z))) g phi, split where g has kinks."""
    xx = np.asarray(x, dtype=float)
    n = xx.size
    m = quad.angular_nodes
    z0 = (np.arange(m) + 0.5) / m
    axes = [(z0, np.full(m, 1.0 / m))]
    half = max(2, m // 2)
    lo = _gauss_on(0.0, 0.5, half)
    hi = _gauss_on(0.5, 1.0, half)
    polar = (np.concatenate([lo[0], hi[0]]), np.concatenate([lo[1], hi[1]]))
    axes += [polar] * (n - 2)
    z, w = _tensor(axes)
    th = 2.0 * np.pi * z
    th[:, 0] *= 2.0
    S = sphere_param(th)
    return ((w * gram_sqrt(th) * J(xx + a * S)) @ S)


def fd_gradient(f: Callable[[FloatArray], float], x: ArrayLike, h: float = 1e-4) -> FloatArray:
    """Central differences, one coordinate at a time."""
    if not h > 0:
        raise ValueError(f"step must be > 0, got {h}")
    xx = np.asarray(x, dtype=float)
    out = np.empty(xx.size)
    for i in range(xx.size):
        e = np.zeros(xx.size)
        e[i] = h
        out[i] = (float(f(xx + e)) - float(f(xx - e))) / (2.0 * h)
    return out


# ------------------------------------------------------------------------------
# Radial probe for critical points
# ------------------------------------------------------------------------------
@dataclass(frozen=True)
class RadialProbe:
    radii: FloatArray
    derivatives: FloatArray
    gradient_norms: FloatArray
    sign_changes: list[float]


def radial_derivative(
    J: ObjectiveField,
    r: float,
    a: float,
    direction: FloatArray,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> float:
    x = r * direction
    grad = J.gradient(x) if a == 0 else averaged_gradient(J, x, a, quad)
    return float(direction @ grad)


def critical_radii(
    J: ObjectiveField,
    a: float,
    radii: ArrayLike,
    n: int,
    direction: ArrayLike | None = None,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> RadialProbe:
    """Sign changes of the radial derivative of J_a (raw J when a = 0), refined by brentq."""
    if a < 0:
        raise ValueError(f"a must be >= 0, got {a}")
    rr = np.asarray(radii, dtype=float)
    e = np.zeros(n)
    e[0] = 1.0
    u = e if direction is None else np.asarray(direction, dtype=float)
    u = u / np.linalg.norm(u)

    def deriv(r: float) -> float:
        return radial_derivative(J, r, a, u, quad)

    d = np.array([deriv(r) for r in rr])
    norms = np.array(
        [
            np.linalg.norm(J.gradient(r * u) if a == 0 else averaged_gradient(J, r * u, a, quad))
            for r in rr
        ]
    )
    roots: list[float] = []
    for i in range(rr.size - 1):
        if d[i] == 0.0:
            roots.append(float(rr[i]))
        elif d[i] * d[i + 1] < 0.0:
            roots.append(float(brentq(deriv, rr[i], rr[i + 1], xtol=1e-10)))
    log.debug("[probe] a=%s sign changes at %s", a, roots)
    return RadialProbe(rr, d, norms, roots)


# ------------------------------------------------------------------------------
# Field grids
# ------------------------------------------------------------------------------
def field_grid(request: FieldGridRequest) -> tuple[FloatArray, FloatArray]:
    """Row-major grid coordinates (first swept axis slowest) and the requested quantity."""
    J = objective_from_spec(request.objective)
    J.check_dimension(request.dimension)
    axes = [np.linspace(ax.min, ax.max, ax.count) for ax in request.axes]
    mesh = np.meshgrid(*axes, indexing="ij")
    coords = np.stack([m.ravel() for m in mesh], axis=-1)
    base = np.zeros(request.dimension) if request.slice is None else np.asarray(request.slice)
    points = np.repeat(base[None, :], coords.shape[0], axis=0)
    for col, ax in enumerate(request.axes):
        points[:, ax.index] = coords[:, col]

    a = request.a
    quad = request.quadrature
    if request.quantity is FieldQuantity.value:
        if a == 0:
            values = np.asarray(J(points), dtype=float)
        else:
            values = np.array([averaged_objective(J, x, a, quad) for x in points])
    else:
        grads = [J.gradient(x) if a == 0 else averaged_gradient(J, x, a, quad) for x in points]
        values = np.linalg.norm(np.asarray(grads), axis=-1)
    log.info("[field] %s a=%g cells=%d", J.name, a, values.size)
    return coords, values
