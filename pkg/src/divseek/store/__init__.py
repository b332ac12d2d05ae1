from .config import Settings, get_settings
from .files import (
    load_field_request,
    load_scenario_config,
    read_trajectory,
    write_grid,
    write_report_lines,
    write_sweep_rows,
    write_trajectory,
)

__all__ = [
    "Settings",
    "get_settings",
    "load_field_request",
    "load_scenario_config",
    "read_trajectory",
    "write_grid",
    "write_report_lines",
    "write_sweep_rows",
    "write_trajectory",
]
