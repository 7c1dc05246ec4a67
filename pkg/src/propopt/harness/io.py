"""Result CSV format.

Floats use 12 significant digits, absent values are empty fields, and a
non-finite loss is written as ``nan``/``inf``.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path

from ..errors import OutputError, ValidationError
from ..losses import LOSS_NAMES, LossReport
from .config import LAMBDA_KEYS
from .sweep import LOSS_COLUMNS, Row, SweepResult

__all__ = ["HEADER", "emit_csv", "read_csv", "format_csv"]

HEADER = ("method", "function", "D", "N", *LAMBDA_KEYS, "delta", "samples", "seed",
          *(LOSS_COLUMNS[n] for n in LOSS_NAMES), "wall_ms", "status")


def _num(v):
    if v is None:
        return ""
    if isinstance(v, int) and not isinstance(v, bool):
        return str(v)
    return format(float(v), ".12g")


def _record(row: Row):
    rep = row.report
    losses = [_num(getattr(rep, n)) if rep is not None else "" for n in LOSS_NAMES]
    return [row.method, row.function, str(row.D), str(row.N), *(_num(v) for v in row.lambdas),
            _num(row.delta), _num(row.samples), _num(row.seed), *losses, _num(row.wall_ms), row.status]


def format_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    for row in result.rows:
        writer.writerow(_record(row))
    return buf.getvalue()


def emit_csv(result: SweepResult, path) -> None:
    path = Path(path)
    try:
        with open(path, "w", newline="") as fh:
            fh.write(format_csv(result))
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _opt_float(s):
    return None if s == "" else float(s)


def _opt_int(s):
    return None if s == "" else int(s)


def read_csv(path) -> SweepResult:
    """Parse a file written by :func:`emit_csv`."""
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            records = list(csv.reader(fh))
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror or exc}") from exc
    if not records or tuple(records[0]) != HEADER:
        raise ValidationError(f"{path}: not a result CSV (unexpected header)")
    rows = []
    col = {name: i for i, name in enumerate(HEADER)}
    for lineno, rec in enumerate(records[1:], start=2):
        if len(rec) != len(HEADER):
            raise ValidationError(f"{path}:{lineno}: expected {len(HEADER)} fields, got {len(rec)}")
        try:
            vals = [rec[col[LOSS_COLUMNS[n]]] for n in LOSS_NAMES]
            report = None if all(v == "" for v in vals) else LossReport(
                *(math.nan if v == "" else float(v) for v in vals))
            rows.append(Row(
                method=rec[col["method"]], function=rec[col["function"]],
                D=int(rec[col["D"]]), N=int(rec[col["N"]]),
                lambdas=tuple(_opt_float(rec[col[k]]) for k in LAMBDA_KEYS),
                delta=_opt_float(rec[col["delta"]]), samples=_opt_int(rec[col["samples"]]),
                seed=_opt_int(rec[col["seed"]]), report=report,
                wall_ms=_opt_float(rec[col["wall_ms"]]), status=rec[col["status"]],
            ))
        except ValueError as exc:
            raise ValidationError(f"{path}:{lineno}: {exc}") from exc
    return SweepResult(tuple(rows))
