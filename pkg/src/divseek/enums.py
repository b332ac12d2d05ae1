from __future__ import annotations

from enum import Enum


class ObjectiveId(str, Enum):
    ringed_gaussian_3d = "ringed_gaussian_3d"
    ringed_gaussian_3d_verbatim = "ringed_gaussian_3d_verbatim"
    perturbed_decay_2d = "perturbed_decay_2d"
    flat_bump_4d = "flat_bump_4d"
    quadratic = "quadratic"
    linear = "linear"
    constant = "constant"


class QuadratureMode(str, Enum):
    tensor_gauss = "tensor_gauss"
    monte_carlo = "monte_carlo"


class DisturbanceKind(str, Enum):
    zero = "zero"
    constant = "constant"
    sinusoid = "sinusoid"
    piecewise_uniform = "piecewise_uniform"


class SystemKind(str, Enum):
    closed_loop = "closed_loop"
    transformed = "transformed"
    averaged = "averaged"


class FieldQuantity(str, Enum):
    value = "value"
    gradient_norm = "gradient_norm"


class SweepAxis(str, Enum):
    omega = "omega"
    k = "k"
    a = "a"
    delta = "delta"


class Suite(str, Enum):
    geometry = "geometry"
    objective = "objective"
    filling = "filling"
    simulate = "simulate"
    approx = "approx"
    examples = "examples"
    iss = "iss"
    all = "all"
