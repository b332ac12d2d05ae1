from __future__ import annotations

import csv
import logging
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import IO, TypeVar

import numpy as np
import orjson
from pydantic import BaseModel, ValidationError

from ..enums import SystemKind
from ..errors import ConfigError
from ..models.components import CheckReport, FieldGridRequest, ScenarioConfig, SweepRow
from ..tools.simulate import Trajectory
from ..util.schema import format_validation_error

log = logging.getLogger("divseek.store")

M = TypeVar("M", bound=BaseModel)


# ------------------------------------------------------------------------------
# Config documents
# ------------------------------------------------------------------------------
def _load_json(path: str | Path) -> object:
    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read {p}: {exc.strerror}", {"path": str(p)}) from exc
    try:
        return orjson.loads(raw)
    except orjson.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON: {exc}", {"path": str(p)}) from exc


def _validated(model: type[M], path: str | Path) -> M:
    data = _load_json(path)
    try:
        out = model.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(format_validation_error(exc), {"path": str(path)}) from exc
    log.debug("[store] loaded %s from %s", model.__name__, path)
    return out


def load_scenario_config(path: str | Path) -> ScenarioConfig:
    return _validated(ScenarioConfig, path)


def load_field_request(path: str | Path) -> FieldGridRequest:
    return _validated(FieldGridRequest, path)


# ------------------------------------------------------------------------------
# CSV
# ------------------------------------------------------------------------------
def _fmt(value: float) -> str:
    # repr gives the shortest string that round-trips to the same double
    return repr(float(value))


def _write_rows(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[str]]) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    log.info("[store] wrote %s", p)
    return p


def trajectory_header(n: int) -> list[str]:
    return (
        ["t"]
        + [f"x{i}" for i in range(1, n + 1)]
        + ["eta", "y_hat"]
        + [f"xt{i}" for i in range(1, n + 1)]
    )


def write_trajectory(path: str | Path, traj: Trajectory) -> Path:
    """t, plant x, eta, y_hat, transformed x~ per recorded step."""
    x = traj.plant_states()
    xt = traj.transformed_states()
    columns = zip(traj.times, x, traj.filter_states, traj.outputs, xt, strict=True)
    rows = (
        [_fmt(t), *map(_fmt, xi), _fmt(eta), _fmt(y_hat), *map(_fmt, xti)]
        for t, xi, eta, y_hat, xti in columns
    )
    return _write_rows(path, trajectory_header(x.shape[1]), rows)


def read_trajectory(path: str | Path) -> Trajectory:
    p = Path(path)
    with p.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(v) for v in row] for row in reader], dtype=float)
    n = (len(header) - 3) // 2
    if header != trajectory_header(n):
        raise ConfigError(f"{p}: not a trajectory file (header {','.join(header)})")
    data = data.reshape(-1, len(header))
    return Trajectory(
        times=data[:, 0],
        states=data[:, 1 : n + 1],
        filter_states=data[:, n + 1],
        outputs=data[:, n + 2],
        system=SystemKind.closed_loop,
        extras={"transformed": data[:, n + 3 :]},
    )


def write_grid(
    path: str | Path, axis_indices: Sequence[int], coords: np.ndarray, values: np.ndarray
) -> Path:
    """Row-major grid: one column per swept coordinate, then the value."""
    header = [f"x{i + 1}" for i in axis_indices] + ["value"]
    rows = ([*map(_fmt, c), _fmt(v)] for c, v in zip(coords, values, strict=True))
    return _write_rows(path, header, rows)


SWEEP_COLUMNS = (
    "axis",
    "value",
    "final_transformed_radius",
    "final_plant_radius",
    "terminal_gap",
    "sup_deviation",
    "error",
)


def write_sweep_rows(path: str | Path, rows: Sequence[SweepRow]) -> Path:
    def cell(row: SweepRow, column: str) -> str:
        v = getattr(row, column)
        if v is None:
            return ""
        return _fmt(v) if isinstance(v, float) else str(v)

    return _write_rows(path, SWEEP_COLUMNS, ([cell(r, c) for c in SWEEP_COLUMNS] for r in rows))


# ------------------------------------------------------------------------------
# Line-delimited JSON
# ------------------------------------------------------------------------------
def dump_line(model: BaseModel) -> bytes:
    return orjson.dumps(model.model_dump(mode="json")) + b"\n"


def write_report_lines(stream: IO[bytes], reports: Iterable[CheckReport]) -> int:
    count = 0
    for report in reports:
        stream.write(dump_line(report))
        count += 1
    stream.flush()
    return count
