"""Sweep configuration: a versioned JSON document validated before any solve.

Example::

    {
      "schema_version": 1,
      "function": {"name": "power", "D": 3, "params": [3]},
      "points": {"mode": "grid", "count": 5, "bounds": [-5, 5], "sample": 100},
      "similarity": {"kind": "gaussian", "scale": 1.0, "dimension_scheme": "chain"},
      "methods": [
        {"name": "optimized", "grid": {"lambda_robust": [0.1, 1, 10]}},
        {"name": "smoothgrad", "grid": {"delta": [0.5, 1.0], "samples": [1000]}}
      ],
      "evaluation": [{"lambda_faithful": 1, "lambda_robust": 1}],
      "seed": 0
    }

``evaluation`` lists the weight settings baseline rows are scored under.  It
defaults to every lambda assignment of the ``optimized`` methods, so each
optimized row has baseline rows scored under the same weights.
"""

from __future__ import annotations

import itertools
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..baselines import DISTRIBUTIONS, EXHAUSTIVE
from ..errors import ConfigError, PropoptError
from ..functions import BENCHMARKS, DifferentiableFunction, PointSet, generate_points, load_mlp, make_benchmark
from ..losses import FAITHFULNESS_FORMS, ROBUSTNESS_FORMS, PropertyWeights
from ..similarity import SimilarityBundle, SimilaritySpec, load_matrix_csv, make_bundle

__all__ = ["SCHEMA_VERSION", "METHODS", "LAMBDA_KEYS", "MethodSpec", "SweepConfig", "load_config",
           "parse_config"]

SCHEMA_VERSION = 1
METHODS = ("optimized", "smoothgrad", "lime", "kernel_shap")
LAMBDA_KEYS = ("lambda_faithful", "lambda_robust", "lambda_smooth", "lambda_complex")
_LAMBDA_DEFAULTS = {"lambda_faithful": [1.0], "lambda_robust": [0.0], "lambda_smooth": [0.0],
                    "lambda_complex": [0.0]}
_GRID_KEYS = {
    "optimized": LAMBDA_KEYS,
    "smoothgrad": ("delta", "samples"),
    "lime": ("delta", "samples"),
    "kernel_shap": ("samples",),
}
_METHOD_OPTIONS = {
    "optimized": {"robustness_form", "faithfulness_form"},
    "smoothgrad": {"distribution"},
    "lime": {"distribution", "intercept", "kernel_width"},
    "kernel_shap": {"background"},
}
_TOP_KEYS = {"schema_version", "function", "points", "similarity", "methods", "evaluation", "seed",
             "workers", "record_timing", "solver", "output"}


@dataclass(frozen=True)
class MethodSpec:
    name: str
    label: str
    grid: dict
    options: dict = field(default_factory=dict)

    def assignments(self):
        """Grid points in row-major order over the method's grid keys."""
        keys = _GRID_KEYS[self.name]
        return [dict(zip(keys, combo)) for combo in itertools.product(*(self.grid[k] for k in keys))]


@dataclass(frozen=True)
class SweepConfig:
    function: dict
    points: dict
    similarity: dict
    methods: tuple
    evaluation: tuple
    seed: int = 0
    workers: int | None = None
    record_timing: bool = False
    solver: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    base_dir: Path = field(default=Path("."), compare=False)

    def with_overrides(self, seed=None, workers=None):
        kw = dict(self.__dict__)
        if seed is not None:
            kw["seed"] = int(seed)
        if workers is not None:
            kw["workers"] = int(workers)
        return SweepConfig(**kw)

    # materialization --------------------------------------------------

    def build_function(self) -> DifferentiableFunction:
        spec = self.function
        if "mlp" in spec:
            return load_mlp(self._path(spec["mlp"]))
        return make_benchmark(spec["name"], spec["D"], spec.get("params", ()))

    @property
    def function_name(self):
        return "mlp" if "mlp" in self.function else self.function["name"]

    def build_points(self, dim) -> PointSet:
        p = self.points
        if p["mode"] == "file":
            pts = np.loadtxt(self._path(p["path"]), delimiter=",", ndmin=2)
            if pts.shape[1] != dim:
                raise ConfigError(f"point file has {pts.shape[1]} columns, function has dimension {dim}")
            bounds = p.get("bounds")
            if bounds is None:
                bounds = np.column_stack([pts.min(axis=0), pts.max(axis=0)])
            else:
                bounds = np.broadcast_to(np.asarray(bounds, float), (dim, 2))
            return PointSet(pts, bounds)
        return generate_points(dim, p["mode"], p["count"], p.get("bounds", (-5.0, 5.0)),
                               seed=p.get("seed", self.seed), sample=p.get("sample"))

    def build_bundle(self, points: PointSet) -> SimilarityBundle:
        s = self.similarity
        matrix = load_matrix_csv(self._path(s["matrix"])) if s["kind"] == "custom" else None
        spec = SimilaritySpec(kind=s["kind"], scale=s.get("scale", 1.0), ridge=s.get("ridge", 1e-8),
                              base=s.get("base", "gaussian"), matrix=matrix)
        dim_kw = {k: s[k] for k in ("h", "w") if k in s}
        if s.get("dimension_scheme") == "custom":
            dim_kw["matrix"] = load_matrix_csv(self._path(s["dimension_matrix"]))
        return make_bundle(points, spec, s.get("dimension_scheme", "chain"), **dim_kw)

    def _path(self, p):
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p


def _fail(msg):
    raise ConfigError(msg)


def _number_list(values, what, *, positive=False, integer=False, allow=()):
    if not isinstance(values, list) or not values:
        _fail(f"{what} must be a non-empty list")
    out = []
    for v in values:
        if v in allow:
            out.append(v)
            continue
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not np.isfinite(v):
            _fail(f"{what} entries must be finite numbers, got {v!r}")
        if integer and int(v) != v:
            _fail(f"{what} entries must be integers, got {v!r}")
        if v < 0 or (positive and v == 0):
            _fail(f"{what} entries must be {'positive' if positive else 'nonnegative'}, got {v!r}")
        out.append(int(v) if integer else float(v))
    return out


def _parse_method(raw, i):
    if not isinstance(raw, dict) or "name" not in raw:
        _fail(f"methods[{i}] must be an object with a 'name'")
    name = raw["name"]
    if name not in METHODS:
        _fail(f"methods[{i}]: unknown method {name!r}; use one of {METHODS}")
    extra = set(raw) - {"name", "label", "grid"} - _METHOD_OPTIONS[name]
    if extra:
        _fail(f"methods[{i}] ({name}): unknown keys {sorted(extra)}")
    grid_raw = raw.get("grid", {})
    if not isinstance(grid_raw, dict):
        _fail(f"methods[{i}].grid must be an object")
    bad = set(grid_raw) - set(_GRID_KEYS[name])
    if bad:
        _fail(f"methods[{i}] ({name}): unknown grid keys {sorted(bad)}")
    where = f"methods[{i}].grid"
    grid = {}
    if name == "optimized":
        for k in LAMBDA_KEYS:
            grid[k] = _number_list(grid_raw.get(k, _LAMBDA_DEFAULTS[k]), f"{where}.{k}")
    elif name == "kernel_shap":
        grid["samples"] = _number_list(grid_raw.get("samples", [EXHAUSTIVE]), f"{where}.samples",
                                       positive=True, integer=True, allow=(EXHAUSTIVE,))
    else:
        grid["delta"] = _number_list(grid_raw.get("delta", [0.5]), f"{where}.delta", positive=True)
        grid["samples"] = _number_list(grid_raw.get("samples", [1000]), f"{where}.samples",
                                       positive=True, integer=True)
    options = {k: raw[k] for k in _METHOD_OPTIONS[name] if k in raw}
    if options.get("distribution", "gaussian") not in DISTRIBUTIONS:
        _fail(f"methods[{i}]: distribution must be one of {DISTRIBUTIONS}")
    if options.get("robustness_form", "pairwise") not in ROBUSTNESS_FORMS:
        _fail(f"methods[{i}]: robustness_form must be one of {ROBUSTNESS_FORMS}")
    if options.get("faithfulness_form", "gradient-match") not in FAITHFULNESS_FORMS:
        _fail(f"methods[{i}]: faithfulness_form must be one of {FAITHFULNESS_FORMS}")
    if "intercept" in options and not isinstance(options["intercept"], bool):
        _fail(f"methods[{i}]: intercept must be true or false")
    if "kernel_width" in options:
        _number_list([options["kernel_width"]], f"methods[{i}].kernel_width", positive=True)
    bg = options.get("background")
    if bg is not None and (not isinstance(bg, list) or not bg or any(
            isinstance(v, bool) or not isinstance(v, (int, float)) or not np.isfinite(v) for v in bg)):
        _fail(f"methods[{i}].background must be a non-empty list of finite numbers")
    return MethodSpec(name, str(raw.get("label", name)), grid, options)


def _weights(raw, what):
    if not isinstance(raw, dict):
        _fail(f"{what} must be an object")
    bad = set(raw) - set(LAMBDA_KEYS) - {"faithfulness_form", "robustness_form"}
    if bad:
        _fail(f"{what}: unknown keys {sorted(bad)}")
    try:
        return PropertyWeights(**raw)
    except (PropoptError, TypeError) as exc:
        _fail(f"{what}: {exc}")


def parse_config(data: dict, base_dir=".") -> SweepConfig:
    """Validate a decoded JSON document and build a :class:`SweepConfig`."""
    if not isinstance(data, dict):
        _fail("config must be a JSON object")
    if data.get("schema_version") != SCHEMA_VERSION:
        _fail(f"schema_version must be {SCHEMA_VERSION}, got {data.get('schema_version')!r}")
    extra = set(data) - _TOP_KEYS
    if extra:
        _fail(f"unknown top-level keys {sorted(extra)}")
    for key in ("function", "points", "similarity", "methods"):
        if key not in data:
            _fail(f"missing required key {key!r}")
    base_dir = Path(base_dir)

    fn = data["function"]
    if not isinstance(fn, dict):
        _fail("function must be an object")
    if "mlp" in fn:
        if not (base_dir / fn["mlp"]).is_file() and not Path(fn["mlp"]).is_file():
            _fail(f"MLP file not found: {fn['mlp']}")
    else:
        if fn.get("name") not in BENCHMARKS:
            _fail(f"function.name must be one of {sorted(BENCHMARKS)} (or give 'mlp')")
        D = fn.get("D")
        if isinstance(D, bool) or not isinstance(D, int) or D < 1:
            _fail("function.D must be a positive integer")

    pts = data["points"]
    if not isinstance(pts, dict) or pts.get("mode") not in ("grid", "uniform", "file"):
        _fail("points.mode must be 'grid', 'uniform' or 'file'")
    if pts["mode"] == "file":
        if not (base_dir / str(pts.get("path", ""))).is_file():
            _fail(f"point file not found: {pts.get('path')}")
    elif isinstance(pts.get("count"), bool) or not isinstance(pts.get("count"), int) or pts["count"] < 1:
        _fail("points.count must be a positive integer")

    sim = data["similarity"]
    if not isinstance(sim, dict) or "kind" not in sim:
        _fail("similarity must be an object with a 'kind'")
    if sim["kind"] == "custom" and not (base_dir / str(sim.get("matrix", ""))).is_file():
        _fail(f"custom similarity matrix file not found: {sim.get('matrix')}")
    if sim.get("dimension_scheme") == "custom" and not (base_dir / str(sim.get("dimension_matrix", ""))).is_file():
        _fail(f"dimension similarity file not found: {sim.get('dimension_matrix')}")

    methods = data["methods"]
    if not isinstance(methods, list) or not methods:
        _fail("methods must be a non-empty list")
    methods = tuple(_parse_method(m, i) for i, m in enumerate(methods))

    if "evaluation" in data:
        ev = data["evaluation"]
        if not isinstance(ev, list) or not ev:
            _fail("evaluation must be a non-empty list of weight objects")
        evaluation = tuple(_weights(e, f"evaluation[{i}]") for i, e in enumerate(ev))
    else:
        seen = []
        for m in methods:
            if m.name != "optimized":
                continue
            for a in m.assignments():
                try:
                    w = PropertyWeights(**a, **{k: m.options[k] for k in ("faithfulness_form", "robustness_form")
                                                if k in m.options})
                except PropoptError:
                    continue
                if w not in seen:
                    seen.append(w)
        evaluation = tuple(seen) or (PropertyWeights(),)

    seed = data.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        _fail("seed must be a nonnegative integer")
    workers = data.get("workers")
    if workers is not None and (isinstance(workers, bool) or not isinstance(workers, int) or workers < 1):
        _fail("workers must be a positive integer")
    solver = data.get("solver", {})
    if not isinstance(solver, dict) or set(solver) - {"tol", "max_iters"}:
        _fail("solver accepts only 'tol' and 'max_iters'")
    record_timing = data.get("record_timing", False)
    if not isinstance(record_timing, bool):
        _fail("record_timing must be true or false")
    output = data.get("output", {})
    if not isinstance(output, dict):
        _fail("output must be an object")

    cfg = SweepConfig(fn, pts, sim, methods, evaluation, seed, workers, record_timing, solver, output,
                      base_dir)
    # materialize the cheap parts now so bad specs fail before any solve
    try:
        f = cfg.build_function()
        cfg.build_bundle(cfg.build_points(f.dimension))
        for m in methods:
            bg = m.options.get("background")
            if bg is not None and len(bg) != f.dimension:
                _fail(f"{m.label}: background has length {len(bg)}, function has dimension {f.dimension}")
    except ConfigError:
        raise
    except PropoptError as exc:
        _fail(f"invalid config: {exc}")
    return cfg


def load_config(path) -> SweepConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return parse_config(data, base_dir=path.parent)


def default_workers(config_workers=None):
    """Worker count: explicit value, else ``PROPOPT_WORKERS``, else 1."""
    if config_workers is not None:
        return int(config_workers)
    env = os.environ.get("PROPOPT_WORKERS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"PROPOPT_WORKERS must be a positive integer, got {env!r}") from None
        if n < 1:
            raise ConfigError(f"PROPOPT_WORKERS must be a positive integer, got {env!r}")
        return n
    return 1
