from __future__ import annotations

from typing import Any

from pydantic import BaseModel, ValidationError


def model_json_schema(model: type[BaseModel]) -> dict[str, Any]:
    """Return JSON Schema for a Pydantic v2 model (draft 2020-12)."""
    return model.model_json_schema()


def format_validation_error(exc: ValidationError, prefix: str = "") -> str:
    """Single line naming each offending field, e.g. `control.a: Input should be greater than 0`."""
    parts = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err.get("loc", ()) if p != "__root__")
        if prefix:
            loc = f"{prefix}.{loc}" if loc else prefix
        parts.append(f"{loc or '<root>'}: {err.get('msg', 'invalid')}")
    return "; ".join(parts)
