"""Spherical coordinates on the unit sphere and the periodic dither signals built on them.

Every function broadcasts over leading batch dimensions: `theta` has shape (..., n-1),
`tau` has shape (...), results carry the same leading shape.
"""
from __future__ import annotations

import logging
from collections.abc import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

log = logging.getLogger("divseek.geometry")

FloatArray = NDArray[np.float64]


def _angles(theta: ArrayLike, n: int | None = None) -> FloatArray:
    th = np.asarray(theta, dtype=float)
    if th.ndim == 0:
        th = th.reshape(1)
    if th.shape[-1] < 1:
        raise ValueError("theta needs at least one angle (n >= 2)")
    if n is not None and th.shape[-1] != n - 1:
        raise ValueError(f"theta has {th.shape[-1]} angles, expected n-1 = {n - 1}")
    return th


def _check_kn(k: int, n: int) -> None:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")


def _factor_tables(th: FloatArray) -> tuple[FloatArray, FloatArray]:
    """Row r of the parametrization is prod_l F[r, l]; dF[r, l] is dF[r, l]/d(theta_l).

    Rows 0 and 1 lead with cos/sin(theta_0), row r >= 2 leads with cos(theta_{r-1});
    every angle after the lead contributes a sine, earlier angles contribute 1.
    """
    m = th.shape[-1]
    n = m + 1
    s = np.sin(th)[..., None, :]
    c = np.cos(th)[..., None, :]
    lead = np.concatenate(([0], np.arange(m)))
    cols = np.arange(m)
    tail = cols[None, :] > lead[:, None]
    is_lead = cols[None, :] == lead[:, None]
    use_sin = (np.arange(n) == 1)[:, None]

    F = np.where(tail, s, 1.0)
    dF = np.where(tail, c, 0.0)
    F = np.where(is_lead, np.where(use_sin, s, c), F)
    dF = np.where(is_lead, np.where(use_sin, c, -s), dF)
    return F, dF


def _jacobian_from_tables(F: FloatArray, dF: FloatArray) -> FloatArray:
    m = F.shape[-1]
    jac = np.empty(F.shape)
    for q in range(m):
        jac[..., q] = dF[..., q] * np.delete(F, q, axis=-1).prod(axis=-1)
    return jac


def sphere_param(theta: ArrayLike) -> FloatArray:
    """Global parametrization phi of the unit sphere in R^n, n = len(theta) + 1."""
    F, _ = _factor_tables(_angles(theta))
    return F.prod(axis=-1)


def sphere_param_jacobian(theta: ArrayLike) -> FloatArray:
    """Closed-form Jacobian D(phi), shape (..., n, n-1)."""
    F, dF = _factor_tables(_angles(theta))
    return _jacobian_from_tables(F, dF)


def gram_sqrt(theta: ArrayLike) -> FloatArray:
    """|sin(t1) sin^2(t2) ... sin^(n-2)(t_{n-2})|; 1 for n = 2."""
    th = _angles(theta)
    powers = np.arange(th.shape[-1])
    return np.prod(np.abs(np.sin(th)) ** powers, axis=-1)


def angle_rates(k: int, n: int) -> FloatArray:
    """Constant angular velocities [1, 2^(k-1), ..., 2^((n-2)k-1)]. k has no effect for n = 2."""
    _check_kn(k, n)
    return np.array([1.0] + [2.0 ** (j * k - 1) for j in range(1, n - 1)])


def fastest_rate(k: int, n: int) -> float:
    return float(max(1.0, 2.0 ** ((n - 2) * k - 1)))


def angle_path(tau: ArrayLike, k: int, n: int) -> FloatArray:
    t = np.asarray(tau, dtype=float)
    return t[..., None] * angle_rates(k, n)


def curve_U(tau: ArrayLike, k: int, n: int) -> FloatArray:
    return sphere_param(angle_path(tau, k, n))


def dither_u(tau: ArrayLike, k: int, n: int) -> FloatArray:
    # chain rule: D(phi)(theta_k(tau)) @ theta_k'
    rates = angle_rates(k, n)
    F, dF = _factor_tables(np.asarray(tau, dtype=float)[..., None] * rates)
    return _jacobian_from_tables(F, dF) @ rates


def dither_v(tau: ArrayLike, k: int, n: int) -> FloatArray:
    th = angle_path(tau, k, n)
    return gram_sqrt(th)[..., None] * sphere_param(th)


def dither_signals(tau: ArrayLike, k: int, n: int) -> tuple[FloatArray, FloatArray, FloatArray]:
    """(U_k, u_k, v_k) at tau from a single evaluation of the factor tables."""
    rates = angle_rates(k, n)
    th = np.asarray(tau, dtype=float)[..., None] * rates
    F, dF = _factor_tables(th)
    U = F.prod(axis=-1)
    u = _jacobian_from_tables(F, dF) @ rates
    v = gram_sqrt(th)[..., None] * U
    return U, u, v


# ------------------------------------------------------------------------------
# Sawtooth space-filling curve on the unit cube
# ------------------------------------------------------------------------------
def sawtooth(sigma: ArrayLike) -> FloatArray:
    """sigma mod 1 with the floor convention, so negative arguments land in [0, 1)."""
    s = np.asarray(sigma, dtype=float)
    return s - np.floor(s)


def filling_curve(sigma: ArrayLike, k: int, d: int) -> FloatArray:
    """[saw(sigma), saw(2^k sigma), ..., saw(2^((d-1)k) sigma)], shape (..., d)."""
    if d < 1 or k < 1:
        raise ValueError(f"need d >= 1 and k >= 1, got d={d}, k={k}")
    scales = 2.0 ** (k * np.arange(d))
    return sawtooth(np.asarray(sigma, dtype=float)[..., None] * scales)


def angle_rescale(z: ArrayLike) -> FloatArray:
    """Map the unit cube onto [0, 2pi] x [0, pi]^(d-1)."""
    zz = np.asarray(z, dtype=float)
    if zz.ndim == 0:
        zz = zz.reshape(1)
    if np.any(zz < 0.0) or np.any(zz > 1.0):
        raise ValueError("cube coordinates must lie in [0, 1]")
    scale = np.full(zz.shape[-1], np.pi)
    scale[0] = 2.0 * np.pi
    return zz * scale


def dyadic_interval(index: Sequence[int], k: int) -> tuple[float, float]:
    """Subinterval of [0, 1] of length 2^(-dk) enumerated by index in {0..2^k-1}^d."""
    d = len(index)
    _check_index(index, k)
    lo = sum(a * 2.0 ** (-(j + 1) * k) for j, a in enumerate(index))
    return lo, lo + 2.0 ** (-d * k)


def dyadic_cube(index: Sequence[int], k: int) -> tuple[FloatArray, FloatArray]:
    """Subcube of [0, 1]^d of side 2^(-k) enumerated by index."""
    _check_index(index, k)
    lo = np.asarray(index, dtype=float) * 2.0**-k
    return lo, lo + 2.0**-k


def _check_index(index: Sequence[int], k: int) -> None:
    if not index or any(a < 0 or a >= 2**k for a in index):
        raise ValueError(f"index entries must lie in 0..{2**k - 1}")
