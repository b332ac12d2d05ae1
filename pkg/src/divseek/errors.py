from __future__ import annotations

from typing import Any


class DivseekError(Exception):
    """Base error. `code` is the machine-readable prefix printed by the CLI."""

    code = "error"
    exit_code = 4

    def __init__(self, message: str, details: dict[str, Any] | None = None) -> None:
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_line(self) -> str:
        return f"divseek-error: {self.code}: {self.message}"


class ConfigError(DivseekError, ValueError):
    code = "config"
    exit_code = 2


class QuadratureError(DivseekError, ValueError):
    code = "quadrature"


class SimulationError(DivseekError, RuntimeError):
    code = "simulation"


class DivergenceError(SimulationError):
    code = "divergence"
    exit_code = 3

    def __init__(self, message: str, t: float, details: dict[str, Any] | None = None) -> None:
        super().__init__(message, {"t": t, **(details or {})})
        self.t = t


class NonFiniteObjectiveError(SimulationError):
    code = "non_finite_objective"
    exit_code = 3
