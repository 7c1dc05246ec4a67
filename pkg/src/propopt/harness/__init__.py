"""Sweeps, Pareto filtering, result files and the command line."""

from .config import METHODS, SCHEMA_VERSION, MethodSpec, SweepConfig, load_config, parse_config
from .io import HEADER, emit_csv, format_csv, read_csv
from .plot import emit_svg_scatter, render_svg_scatter
from .sweep import Context, Row, SweepResult, explain, loss_value, pareto_front, run_sweep

__all__ = [
    "SCHEMA_VERSION", "METHODS", "MethodSpec", "SweepConfig", "load_config", "parse_config",
    "HEADER", "emit_csv", "format_csv", "read_csv", "emit_svg_scatter", "render_svg_scatter",
    "Context", "Row", "SweepResult", "explain", "loss_value", "pareto_front", "run_sweep",
]
