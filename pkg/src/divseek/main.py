"""divseek command line: simulate, field, verify, sweep and schema subcommands.

stdout carries machine-readable output only (JSON lines); logs go to stderr. Every failure
prints a single `divseek-error: <code>: <message>` line and exits nonzero.
"""
from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, NoReturn

import numpy as np
import orjson
from pydantic import ValidationError

from .enums import DisturbanceKind, Suite, SweepAxis
from .errors import ConfigError, DivseekError
from .models.components import (
    ControlParams,
    DisturbanceSpec,
    FieldGridRequest,
    ScenarioConfig,
    SweepRow,
    SweepSpec,
)
from .registry import run_suite
from .store import (
    get_settings,
    load_field_request,
    load_scenario_config,
    write_grid,
    write_report_lines,
    write_sweep_rows,
    write_trajectory,
)
from .tools.objective import averaged_objective, field_grid, objective_from_spec
from .tools.simulate import radius_at, resolve_integrator, simulate_scenario, to_transformed
from .tools.verify import summarize_run, sup_deviation
from .util.schema import format_validation_error, model_json_schema

log = logging.getLogger("divseek.main")

LOG_FORMAT = "%(asctime)s %(levelname)s [%(name)s] %(message)s"

_SCHEMAS = {"scenario": ScenarioConfig, "field": FieldGridRequest}


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="divseek", description="Divergence-theorem extremum seeking toolkit")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate a scenario and write its trajectory")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("field", help="evaluate J or J_a on a grid")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)

    p = sub.add_parser("verify", help="run verification checks")
    p.add_argument("--suite", choices=[s.value for s in Suite], default=Suite.all.value)

    p = sub.add_parser("sweep", help="run a scenario once per parameter value")
    p.add_argument("--config", required=True)
    p.add_argument("--axis", choices=[a.value for a in SweepAxis], required=True)
    p.add_argument("--values", required=True, help="comma-separated list")
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--deviation", action="store_true", help="add sup |x~ - x_bar| column")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("schema", help="print the JSON schema of a config document")
    p.add_argument("kind", choices=sorted(_SCHEMAS))
    return parser


def _configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format=LOG_FORMAT,
        stream=sys.stderr,
        force=True,
    )


def _emit(payload: dict[str, Any]) -> None:
    sys.stdout.buffer.write(orjson.dumps(payload, option=orjson.OPT_SERIALIZE_NUMPY) + b"\n")
    sys.stdout.buffer.flush()


def _output_path(explicit: str | None, configured: str | None, default_name: str) -> Path:
    if explicit:
        return Path(explicit)
    if configured:
        return Path(configured)
    return Path(get_settings().output_dir) / default_name


def _reseed(config: ScenarioConfig, seed: int) -> ScenarioConfig:
    return config.model_copy(
        update={
            "disturbance": config.disturbance.model_copy(update={"seed": seed}),
            "quadrature": config.quadrature.model_copy(update={"seed": seed}),
        }
    )


# ------------------------------------------------------------------------------
# simulate
# ------------------------------------------------------------------------------
def cmd_simulate(args: argparse.Namespace) -> int:
    config = load_scenario_config(args.config)
    if args.seed is not None:
        config = _reseed(config, args.seed)
    traj = simulate_scenario(config)
    out = write_trajectory(
        _output_path(args.out, config.output.trajectory, f"{config.name}.csv"), traj
    )

    result = summarize_run(config, traj)
    J = objective_from_spec(config.objective)
    x_t = traj.transformed_states()[-1]
    a_f = float(radius_at(config.control, result.final_time))
    summary = {
        **result.model_dump(),
        "objective_value": J.value(traj.plant_states()[-1]),
        "averaged_value": averaged_objective(J, x_t, a_f, config.quadrature),
        "trajectory_file": str(out),
    }
    if config.output.summary:
        Path(config.output.summary).write_bytes(orjson.dumps(summary) + b"\n")
    _emit(summary)
    return 0


# ------------------------------------------------------------------------------
# field
# ------------------------------------------------------------------------------
def cmd_field(args: argparse.Namespace) -> int:
    request = load_field_request(args.config)
    coords, values = field_grid(request)
    out = write_grid(
        _output_path(args.out, None, "field.csv"), [ax.index for ax in request.axes], coords, values
    )
    _emit(
        {
            "cells": int(values.size),
            "min": float(np.min(values)),
            "max": float(np.max(values)),
            "grid_file": str(out),
        }
    )
    return 0


# ------------------------------------------------------------------------------
# verify
# ------------------------------------------------------------------------------
def cmd_verify(args: argparse.Namespace) -> int:
    reports = run_suite(args.suite)
    write_report_lines(sys.stdout.buffer, reports)
    failed = [r.name for r in reports if not r.passed]
    if failed:
        log.warning("[verify] %d of %d checks failed: %s", len(failed), len(reports), failed)
        return 1
    log.info("[verify] all %d checks passed", len(reports))
    return 0


# ------------------------------------------------------------------------------
# sweep
# ------------------------------------------------------------------------------
def parse_values(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"--values: {exc}") from exc


def sweep_variant(config: ScenarioConfig, axis: SweepAxis, value: float) -> ScenarioConfig:
    """Scenario with one parameter replaced; raises ConfigError if the result is invalid."""
    if axis is SweepAxis.delta:
        dist = (
            DisturbanceSpec()
            if value == 0
            else DisturbanceSpec(
                kind=DisturbanceKind.piecewise_uniform,
                bound=value,
                dwell=config.disturbance.dwell,
                seed=config.disturbance.seed,
            )
        )
        return config.model_copy(update={"disturbance": dist})
    raw = config.control.model_dump()
    raw[axis.value] = int(value) if axis is SweepAxis.k else value
    try:
        control = ControlParams.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(format_validation_error(exc, prefix="control")) from exc
    return config.model_copy(update={"control": control})


def run_sweep_point(
    config: ScenarioConfig, axis: SweepAxis, value: float, deviation: bool
) -> SweepRow:
    """One sweep row; failures are recorded in the row instead of raised."""
    try:
        variant = sweep_variant(config, axis, value)
        result = summarize_run(variant, simulate_scenario(variant))
        sup = None
        if deviation:
            p = variant.control
            sup = sup_deviation(
                objective_from_spec(variant.objective),
                p,
                to_transformed(variant.initial.x, 0.0, p),
                resolve_integrator(variant).t_final,
                variant.disturbance,
                variant.quadrature,
            )
        return SweepRow(
            axis=axis.value,
            value=value,
            final_transformed_radius=result.final_transformed_radius,
            final_plant_radius=result.final_plant_radius,
            terminal_gap=result.objective_gap,
            sup_deviation=sup,
        )
    except DivseekError as exc:
        log.warning("[sweep] %s=%g failed: %s", axis.value, value, exc.to_line())
        return SweepRow(axis=axis.value, value=value, error=exc.to_line())
    except Exception as exc:  # noqa: BLE001
        log.exception("[sweep] %s=%g crashed", axis.value, value)
        return SweepRow(axis=axis.value, value=value, error=f"divseek-error: error: {exc}")


def _sweep_job(job: tuple[ScenarioConfig, SweepAxis, float, bool]) -> SweepRow:
    return run_sweep_point(*job)


def cmd_sweep(args: argparse.Namespace) -> int:
    config = load_scenario_config(args.config)
    if args.seed is not None:
        config = _reseed(config, args.seed)
    try:
        spec = SweepSpec(axis=args.axis, values=parse_values(args.values), deviation=args.deviation)
    except ValidationError as exc:
        raise ConfigError(format_validation_error(exc, prefix="sweep")) from exc
    jobs = args.jobs if args.jobs is not None else get_settings().default_jobs
    if jobs < 1:
        raise ConfigError(f"--jobs must be >= 1, got {jobs}")

    work = [(config, spec.axis, v, spec.deviation) for v in spec.values]
    log.info("[sweep] %s over %d values, jobs=%d", spec.axis.value, len(work), jobs)
    if jobs == 1 or len(work) == 1:
        rows = [_sweep_job(w) for w in work]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_job, work))

    out = write_sweep_rows(_output_path(args.out, None, f"{config.name}_sweep.csv"), rows)
    failed = sum(r.error is not None for r in rows)
    _emit({"rows": len(rows), "failed": failed, "sweep_file": str(out)})
    return 0


# ------------------------------------------------------------------------------
# schema
# ------------------------------------------------------------------------------
def cmd_schema(args: argparse.Namespace) -> int:
    schema = model_json_schema(_SCHEMAS[args.kind])
    sys.stdout.buffer.write(orjson.dumps(schema, option=orjson.OPT_INDENT_2) + b"\n")
    return 0


_COMMANDS = {
    "simulate": cmd_simulate,
    "field": cmd_field,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "schema": cmd_schema,
}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        _configure_logging(args.log_level or get_settings().log_level)
        log.debug("[main] command=%s args=%s", args.command, vars(args))
        return _COMMANDS[args.command](args)
    except DivseekError as exc:
        print(exc.to_line().replace("\n", " "), file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # noqa: BLE001
        log.debug("[main] unhandled", exc_info=True)
        line = f"divseek-error: error: {type(exc).__name__}: {exc}"
        print(line.replace("\n", " "), file=sys.stderr)
        return DivseekError.exit_code


if __name__ == "__main__":
    sys.exit(main())
