"""Differentiable target functions and point-set generation.

Every function here is vectorized over leading axes: ``evaluate`` maps an
array of shape ``(..., D)`` to ``(...)`` and ``gradient`` maps it to
``(..., D)``.  Baselines rely on this to evaluate thousands of perturbed
inputs in a single call.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import RegistryError, ValidationError

__all__ = [
    "DifferentiableFunction",
    "PointSet",
    "MlpSpec",
    "BENCHMARKS",
    "make_benchmark",
    "mlp_from_spec",
    "load_mlp",
    "random_mlp",
    "gradient_check",
    "generate_points",
]

MAX_GRID_POINTS = 10**7


@dataclass(frozen=True)
class DifferentiableFunction:
    """Scalar function on R^D with an exact gradient."""

    name: str
    dimension: int
    evaluate: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    gradient: Callable[[np.ndarray], np.ndarray] = field(repr=False)

    def __call__(self, x):
        return self.evaluate(np.asarray(x, dtype=float))

    def grad(self, x):
        return self.gradient(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class PointSet:
    """N points in D dimensions together with their box domain.

    ``bounds`` has shape ``(D, 2)``; row ``d`` is the closed interval for
    coordinate ``d``.
    """

    points: np.ndarray
    bounds: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValidationError(f"points must be an N x D matrix, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValidationError("points contain non-finite entries")
        bnd = _normalize_bounds(self.bounds, pts.shape[1])
        if np.any(pts < bnd[:, 0]) or np.any(pts > bnd[:, 1]):
            raise ValidationError("points fall outside their bounds")
        pts.setflags(write=False)
        bnd.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "bounds", bnd)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.n

    def union(self, other: "PointSet") -> "PointSet":
        """Stack ``other`` below ``self``; bounds become the enclosing box."""
        if other.dim != self.dim:
            raise ValidationError("cannot join point sets of different dimension")
        bounds = np.column_stack(
            [np.minimum(self.bounds[:, 0], other.bounds[:, 0]),
             np.maximum(self.bounds[:, 1], other.bounds[:, 1])]
        )
        return PointSet(np.vstack([self.points, other.points]), bounds)


def _normalize_bounds(bounds, dim):
    b = np.array(bounds, dtype=float)
    if b.shape == (2,):
        b = np.tile(b, (dim, 1))
    if b.shape != (dim, 2):
        raise ValidationError(f"bounds must be (lo, hi) or a ({dim}, 2) array, got shape {b.shape}")
    if not np.all(np.isfinite(b)) or np.any(b[:, 0] > b[:, 1]):
        raise ValidationError("bounds must be finite with lo <= hi")
    return b


# ---------------------------------------------------------------------------
# Benchmark registry
# ---------------------------------------------------------------------------

def _power(D, params):
    if len(params) != 1:
        raise ValidationError("power takes exactly one parameter K")
    K = params[0]
    if K != int(K) or K < 1:
        raise ValidationError(f"power exponent K must be a positive integer, got {K}")
    K = int(K)
    ev = lambda x: np.sum(x**K, axis=-1)
    gr = lambda x: K * x ** (K - 1)
    return ev, gr


def _polynomial_cross(D, params):
    # sum_d x_d^2 + sum_d sum_d' x_d x_d' == |x|^2 + (sum x)^2
    _no_params("polynomial-cross", params)
    ev = lambda x: np.sum(x**2, axis=-1) + np.sum(x, axis=-1) ** 2
    gr = lambda x: 2.0 * x + 2.0 * np.sum(x, axis=-1, keepdims=True)
    return ev, gr


def _sum_sin(D, params):
    _no_params("sum-sin", params)
    return (lambda x: np.sum(np.sin(x), axis=-1)), np.cos


def _sum_exp(D, params):
    _no_params("sum-exp", params)
    return (lambda x: np.sum(np.exp(x), axis=-1)), np.exp


def _sin_of_exp(D, params):
    _no_params("sin-of-exp", params)
    ev = lambda x: np.sum(np.sin(np.exp(x)), axis=-1)
    gr = lambda x: np.cos(np.exp(x)) * np.exp(x)
    return ev, gr


def _linear_plus_sin_exp(D, params):
    _no_params("linear-plus-sin-exp", params)
    ev = lambda x: np.sum(x + np.sin(np.exp(x)), axis=-1)
    gr = lambda x: 1.0 + np.cos(np.exp(x)) * np.exp(x)
    return ev, gr


def _quadratic_plus_sin_3x(D, params):
    _no_params("quadratic-plus-sin-3x", params)
    ev = lambda x: np.sum(x**2 / 10.0 + np.sin(3.0 * x), axis=-1)
    gr = lambda x: x / 5.0 + 3.0 * np.cos(3.0 * x)
    return ev, gr


def _linear_plus_sin_3x(D, params):
    _no_params("linear-plus-sin-3x", params)
    ev = lambda x: np.sum(x + np.sin(3.0 * x), axis=-1)
    gr = lambda x: 1.0 + 3.0 * np.cos(3.0 * x)
    return ev, gr


def _linear(D, params):
    if len(params) != D:
        raise ValidationError(f"linear needs D={D} coefficients, got {len(params)}")
    a = np.array(params, dtype=float)
    return (lambda x: x @ a), (lambda x: np.broadcast_to(a, np.shape(x)).copy())


def _no_params(name, params):
    if len(params):
        raise ValidationError(f"{name} takes no parameters, got {list(params)}")


BENCHMARKS = {
    "power": _power,
    "polynomial-cross": _polynomial_cross,
    "sum-sin": _sum_sin,
    "sum-exp": _sum_exp,
    "sin-of-exp": _sin_of_exp,
    "linear-plus-sin-exp": _linear_plus_sin_exp,
    "quadratic-plus-sin-3x": _quadratic_plus_sin_3x,
    "linear-plus-sin-3x": _linear_plus_sin_3x,
    "linear": _linear,
}


def make_benchmark(name: str, D: int, params: Sequence[float] = ()) -> DifferentiableFunction:
    """Build a registered analytic benchmark.

    >>> f = make_benchmark("power", 3, [3])
    >>> float(f([1.0, 1.0, 1.0]))
    3.0
    """
    try:
        factory = BENCHMARKS[name]
    except KeyError:
        raise RegistryError(
            f"unknown benchmark {name!r}; choose one of {sorted(BENCHMARKS)}"
        ) from None
    if int(D) != D or D < 1:
        raise ValidationError(f"dimension must be a positive integer, got {D}")
    params = [float(p) for p in params]
    ev, gr = factory(int(D), params)
    label = name if not params or name == "linear" else f"{name}({','.join(f'{p:g}' for p in params)})"
    return DifferentiableFunction(label, int(D), ev, gr)


# ---------------------------------------------------------------------------
# MLPs
# ---------------------------------------------------------------------------

_ACTIVATIONS = ("tanh", "relu", "identity")


@dataclass(frozen=True)
class MlpSpec:
    """Layers are ``(W, b, activation)`` with ``W`` of shape ``(out, in)``."""

    layers: tuple
    input_dim: int

    def __post_init__(self):
        if not self.layers:
            raise ValidationError("MLP needs at least one layer")
        width = self.input_dim
        layers = []
        for k, (W, b, act) in enumerate(self.layers):
            W = np.atleast_2d(np.asarray(W, dtype=float))
            b = np.atleast_1d(np.asarray(b, dtype=float))
            if act not in _ACTIVATIONS:
                raise ValidationError(f"layer {k}: unknown activation {act!r}")
            if W.shape[1] != width:
                raise ValidationError(
                    f"layer {k}: weight expects input width {W.shape[1]}, previous width is {width}"
                )
            if b.shape != (W.shape[0],):
                raise ValidationError(f"layer {k}: bias shape {b.shape} does not match {W.shape[0]} outputs")
            if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
                raise ValidationError(f"layer {k}: non-finite weights")
            layers.append((W, b, act))
            width = W.shape[0]
        if width != 1:
            raise ValidationError(f"final layer must have one output, got {width}")
        object.__setattr__(self, "layers", tuple(layers))


def _forward(spec, x):
    h = x
    cache = []
    for W, b, act in spec.layers:
        z = h @ W.T + b
        cache.append(z)
        if act == "tanh":
            h = np.tanh(z)
        elif act == "relu":
            h = np.maximum(z, 0.0)
        else:
            h = z
    return h[..., 0], cache


def _backward(spec, x):
    _, cache = _forward(spec, x)
    # reverse-mode: start from d out / d out = 1
    delta = np.ones(np.shape(x)[:-1] + (1,))
    for (W, _, act), z in zip(reversed(spec.layers), reversed(cache)):
        if act == "tanh":
            delta = delta * (1.0 - np.tanh(z) ** 2)
        elif act == "relu":
            delta = delta * (z > 0.0)  # subgradient 0 at z == 0
        delta = delta @ W
    return delta


def mlp_from_spec(spec: MlpSpec, name: str = "mlp") -> DifferentiableFunction:
    return DifferentiableFunction(
        name,
        spec.input_dim,
        lambda x: _forward(spec, x)[0],
        lambda x: _backward(spec, x),
    )


def load_mlp(path) -> DifferentiableFunction:
    """Load an MLP from the JSON weights format.

    ``{"input_dim": D, "layers": [{"W": [[...]], "b": [...], "activation": "tanh"}]}``
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ValidationError(f"MLP weights file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None
    try:
        layers = tuple((L["W"], L["b"], L["activation"]) for L in doc["layers"])
        spec = MlpSpec(layers, int(doc["input_dim"]))
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"{path}: malformed MLP document ({exc})") from None
    return mlp_from_spec(spec, name=f"mlp:{path.stem}")


def random_mlp(D: int, hidden=(16, 16), activation="tanh", seed=0) -> MlpSpec:
    """Seeded Glorot-style two-hidden-layer MLP; stands in for trained weights."""
    rng = np.random.default_rng(seed)
    widths = [D, *hidden, 1]
    layers = []
    for k, (fan_in, fan_out) in enumerate(zip(widths[:-1], widths[1:])):
        scale = np.sqrt(2.0 / (fan_in + fan_out))
        act = activation if k < len(widths) - 2 else "identity"
        layers.append((rng.normal(0.0, scale, (fan_out, fan_in)), rng.normal(0.0, 0.1, fan_out), act))
    return MlpSpec(tuple(layers), D)


def save_mlp(spec: MlpSpec, path) -> None:
    doc = {
        "input_dim": spec.input_dim,
        "layers": [{"W": W.tolist(), "b": b.tolist(), "activation": a} for W, b, a in spec.layers],
    }
    Path(path).write_text(json.dumps(doc))


# ---------------------------------------------------------------------------
# Checks and point generation
# ---------------------------------------------------------------------------

def gradient_check(f: DifferentiableFunction, points, step: float = 1e-5) -> float:
    """Max over points and coordinates of ``|analytic - central| / (1 + |analytic|)``."""
    if step <= 0:
        raise ValidationError("finite-difference step must be positive")
    X = points.points if isinstance(points, PointSet) else np.atleast_2d(np.asarray(points, float))
    analytic = f.grad(X)
    eye = np.eye(X.shape[1]) * step
    fd = np.stack(
        [(f(X + e) - f(X - e)) / (2.0 * step) for e in eye], axis=-1
    )
    return float(np.max(np.abs(analytic - fd) / (1.0 + np.abs(analytic))))


def generate_points(D: int, mode: str, count: int, bounds=(-5.0, 5.0), seed: int = 0,
                    sample: int | None = None) -> PointSet:
    """Grid or uniform points inside a box.

    In grid mode ``count`` is the per-dimension count and the grid includes both
    endpoints; ``sample`` optionally keeps a seeded subset of that many grid
    points.  In uniform mode ``count`` is the total number of points.
    """
    if int(D) != D or D < 1 or int(count) != count or count < 1:
        raise ValidationError("D and count must be positive integers")
    D, count = int(D), int(count)
    bnd = _normalize_bounds(bounds, D)
    if mode == "grid":
        if count**D > MAX_GRID_POINTS:
            raise ValidationError(f"grid of {count}^{D} points exceeds the {MAX_GRID_POINTS} limit")
        axes = [np.linspace(lo, hi, count) for lo, hi in bnd]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, D)
        if sample is not None:
            if not 1 <= sample <= len(pts):
                raise ValidationError(f"sample must be in [1, {len(pts)}], got {sample}")
            keep = np.sort(np.random.default_rng(seed).choice(len(pts), size=sample, replace=False))
            pts = pts[keep]
    elif mode == "uniform":
        pts = np.random.default_rng(seed).uniform(bnd[:, 0], bnd[:, 1], size=(count, D))
    else:
        raise ValidationError(f"unknown point mode {mode!r}; use 'grid' or 'uniform'")
    return PointSet(pts, bnd)
