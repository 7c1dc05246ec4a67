"""Hyperparameter sweeps, scoring, and Pareto filtering."""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ..baselines import EXHAUSTIVE, PerturbationSpec, explain_points
from ..errors import PropoptError, ValidationError
from ..losses import LOSS_NAMES, LossReport, PropertyWeights, evaluate_all, weighted_total
from ..solvers import TransductiveProblem, solve
from .config import LAMBDA_KEYS, MethodSpec, SweepConfig, default_workers

__all__ = ["Row", "SweepResult", "Context", "run_sweep", "pareto_front", "explain", "loss_value",
           "LOSS_COLUMNS"]

LOSS_COLUMNS = {name: f"loss_{name}" if name != "total" else "total" for name in LOSS_NAMES}


@dataclass(frozen=True)
class Row:
    method: str
    function: str
    D: int
    N: int
    lambdas: tuple
    delta: float | None = None
    samples: int | None = None
    seed: int | None = None
    report: LossReport | None = None
    wall_ms: float | None = None
    status: str = "ok"

    @property
    def weights(self):
        return dict(zip(LAMBDA_KEYS, self.lambdas))


@dataclass(frozen=True)
class SweepResult:
    rows: tuple = field(default_factory=tuple)

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)


@dataclass(frozen=True)
class Context:
    """Everything shared (read-only) by the rows of one sweep."""

    config: SweepConfig
    f: object
    points: object
    bundle: object
    G: np.ndarray

    @classmethod
    def build(cls, config: SweepConfig):
        f = config.build_function()
        points = config.build_points(f.dimension)
        bundle = config.build_bundle(points)
        G = f.grad(points.points)
        G.setflags(write=False)
        return cls(config, f, points, bundle, G)


def loss_value(row: Row, name: str) -> float:
    """Named loss of a row; accepts ``robust_pair`` or its column name ``loss_robust_pair``."""
    key = name[5:] if name.startswith("loss_") else name
    if key not in LOSS_NAMES:
        raise ValidationError(f"unknown loss {name!r}; use one of {[LOSS_COLUMNS[n] for n in LOSS_NAMES]}")
    if row.report is None:
        return math.nan
    return float(getattr(row.report, key))


def _weights_for(method: MethodSpec, assignment):
    forms = {k: method.options[k] for k in ("faithfulness_form", "robustness_form") if k in method.options}
    return PropertyWeights(**assignment, **forms)


def explain(ctx: Context, method: MethodSpec, assignment: dict) -> np.ndarray:
    """Explanation matrix of one method at one grid point."""
    cfg = ctx.config
    if method.name == "optimized":
        problem = TransductiveProblem(ctx.points, ctx.G, ctx.bundle, _weights_for(method, assignment),
                                      solver_tol=cfg.solver.get("tol", 1e-8),
                                      max_iters=cfg.solver.get("max_iters", 50000))
        return solve(problem)
    if method.name == "kernel_shap":
        return explain_points("kernel_shap", ctx.f, ctx.points, background=method.options.get("background"),
                              sample_coalitions=assignment["samples"], seed=cfg.seed)
    pert = PerturbationSpec(method.options.get("distribution", "gaussian"), assignment["delta"],
                            assignment["samples"], cfg.seed)
    return explain_points(method.name, ctx.f, ctx.points, pert=pert,
                          intercept=method.options.get("intercept", True),
                          kernel_width=method.options.get("kernel_width"))


def _task(ctx: Context, method: MethodSpec, assignment: dict):
    """Rows for one (method, grid point) pair."""
    cfg = ctx.config
    delta = assignment.get("delta")
    samples = assignment.get("samples")
    samples = None if samples == EXHAUSTIVE else samples
    base = Row(method.label, cfg.function_name, ctx.points.dim, ctx.points.n, (), delta, samples, cfg.seed)
    if method.name == "optimized":
        settings = [tuple(assignment[k] for k in LAMBDA_KEYS)]
    else:
        settings = [w.lambdas() for w in cfg.evaluation]
    t0 = time.perf_counter()
    try:
        if method.name == "optimized":
            weights = [_weights_for(method, assignment)]
        else:
            weights = list(cfg.evaluation)
        W = explain(ctx, method, assignment)
        first = evaluate_all(W, ctx.points, ctx.f, ctx.bundle, weights[0], G=ctx.G)
        reports = [first] + [replace(first, total=weighted_total(first, w)) for w in weights[1:]]
        status = "ok"
    except PropoptError as exc:
        reports = [None] * len(settings)
        status = f"error:{type(exc).__name__}"
    wall = (time.perf_counter() - t0) * 1e3 if cfg.record_timing else None
    return [replace(base, lambdas=lams, report=rep, wall_ms=wall, status=status)
            for lams, rep in zip(settings, reports)]


def run_sweep(config: SweepConfig, workers=None, context: Context | None = None) -> SweepResult:
    """Run every method at every grid point; rows come back in grid order.

    Baseline rows are repeated once per evaluation weight setting.  Solver or
    sampling failures become rows with ``status="error:<Kind>"``.
    """
    ctx = Context.build(config) if context is None else context
    tasks = [(m, a) for m in config.methods for a in m.assignments()]
    n = default_workers(workers if workers is not None else config.workers)
    if n == 1 or len(tasks) <= 1:
        chunks = [_task(ctx, m, a) for m, a in tasks]
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            chunks = list(pool.map(lambda t: _task(ctx, *t), tasks))
    return SweepResult(tuple(row for chunk in chunks for row in chunk))


def pareto_front(result: SweepResult, loss_x: str, loss_y: str) -> SweepResult:
    """Rows not weakly dominated in the ``(loss_x, loss_y)`` plane, sorted by ``loss_x``.

    Rows with a non-finite value of either loss are dropped.  Among exact
    duplicates the earliest row is kept.
    """
    cand = []
    for idx, row in enumerate(result.rows):
        x, y = loss_value(row, loss_x), loss_value(row, loss_y)
        if math.isfinite(x) and math.isfinite(y):
            cand.append((x, y, idx, row))
    keep = []
    for x, y, idx, row in cand:
        dominated = False
        for x2, y2, idx2, _ in cand:
            if idx2 == idx:
                continue
            if x2 <= x and y2 <= y and (x2 < x or y2 < y):
                dominated = True
                break
            if x2 == x and y2 == y and idx2 < idx:
                dominated = True
                break
        if not dominated:
            keep.append((x, idx, row))
    keep.sort(key=lambda t: t[:2])
    return SweepResult(tuple(r for _, _, r in keep))
