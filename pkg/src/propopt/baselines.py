"""SmoothGrad, LIME and Kernel-SHAP, reimplemented so that their explanations
can be scored by the same losses as the optimized ones.

Perturbations are ``x + eps`` with ``eps ~ N(0, delta^2 I)`` ("gaussian") or
``eps`` uniform in the D-ball of radius ``delta**2`` ("uniform-ball").
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import SamplingError, ValidationError
from .functions import DifferentiableFunction, PointSet

__all__ = [
    "PerturbationSpec",
    "smoothgrad",
    "lime",
    "kernel_shap",
    "shapley_weights",
    "explain_points",
]

DISTRIBUTIONS = ("gaussian", "uniform-ball")
EXHAUSTIVE = "exhaustive"


@dataclass(frozen=True)
class PerturbationSpec:
    distribution: str = "gaussian"
    delta: float = 0.5
    samples: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.distribution not in DISTRIBUTIONS:
            raise ValidationError(f"distribution must be one of {DISTRIBUTIONS}")
        if not (np.isfinite(self.delta) and self.delta > 0):
            raise ValidationError(f"delta must be positive, got {self.delta}")
        if int(self.samples) != self.samples or self.samples < 1:
            raise ValidationError(f"samples must be a positive integer, got {self.samples}")

    def rng(self, index=None):
        key = [self.seed] if index is None else [self.seed, index]
        return np.random.default_rng(key)

    def draw(self, D, index=None):
        """``samples x D`` noise matrix."""
        rng = self.rng(index)
        S = int(self.samples)
        if self.distribution == "gaussian":
            return rng.normal(0.0, self.delta, size=(S, D))
        direction = rng.standard_normal((S, D))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        radius = self.delta**2 * rng.uniform(size=(S, 1)) ** (1.0 / D)
        return direction * radius


def smoothgrad(f: DifferentiableFunction, x, pert: PerturbationSpec, index=None) -> np.ndarray:
    """Mean gradient over perturbed copies of ``x``."""
    x = np.asarray(x, dtype=float)
    eps = pert.draw(x.shape[0], index)
    return np.mean(f.grad(x + eps), axis=0)


def lime(f: DifferentiableFunction, x, pert: PerturbationSpec, intercept: bool = True,
         kernel_width: float | None = None, index=None) -> np.ndarray:
    """Least-squares linear surrogate fit on perturbed samples around ``x``.

    With ``intercept`` the fit is affine and is done on centred samples
    ``x~ - x`` (same slope, better conditioned).  Without it the model is
    ``w . x~`` exactly.  ``kernel_width`` switches on Gaussian sample weights
    ``exp(-|x~ - x|^2 / (2 width^2))``.
    """
    x = np.asarray(x, dtype=float)
    D = x.shape[0]
    need = D + (1 if intercept else 0)
    if pert.samples < need:
        raise SamplingError(f"LIME needs at least {need} samples, got {pert.samples}")
    eps = pert.draw(D, index)
    xs = x + eps
    y = f(xs)
    design = np.column_stack([eps, np.ones(len(eps))]) if intercept else xs
    if kernel_width is not None:
        sw = np.sqrt(np.exp(-np.sum(eps**2, axis=1) / (2.0 * kernel_width**2)))
        design, y = design * sw[:, None], y * sw
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < need:
        raise SamplingError(
            f"LIME design matrix has rank {rank} < {need}; increase samples or delta"
        )
    return coef[:D]


def shapley_weights(D):
    """Kernel-SHAP weight for each coalition size 1..D-1."""
    return {k: (D - 1) / (comb(D, k) * k * (D - k)) for k in range(1, D)}


def kernel_shap(f: DifferentiableFunction, x, background, sample_coalitions=EXHAUSTIVE,
                seed: int = 0, index=None) -> np.ndarray:
    """Kernel-SHAP attributions with the efficiency constraint imposed exactly.

    Masked coordinates take the ``background`` value.  ``sample_coalitions``
    is either ``"exhaustive"`` (all 2^D - 2 proper coalitions, Shapley kernel
    weights) or a count of coalitions drawn from the Shapley kernel
    distribution (then weighted uniformly).
    """
    x = np.asarray(x, dtype=float)
    b = np.asarray(background, dtype=float)
    D = x.shape[0]
    if b.shape != x.shape:
        raise ValidationError("background must match x")
    fx, fb = float(f(x)), float(f(b))
    total = fx - fb
    if D == 1:
        return np.array([total])
    kw = shapley_weights(D)
    if sample_coalitions == EXHAUSTIVE or sample_coalitions is None:
        Z = np.array([z for z in itertools.product((0.0, 1.0), repeat=D) if 0 < sum(z) < D])
        weights = np.array([kw[int(z.sum())] for z in Z])
    else:
        n = int(sample_coalitions)
        if n < 1:
            raise ValidationError("sample_coalitions must be positive")
        rng = np.random.default_rng([seed] if index is None else [seed, index])
        sizes = np.arange(1, D)
        p = np.array([kw[k] * comb(D, k) for k in sizes])
        ks = rng.choice(sizes, size=n, p=p / p.sum())
        Z = np.zeros((n, D))
        for row, k in enumerate(ks):
            Z[row, rng.choice(D, size=k, replace=False)] = 1.0
        weights = np.ones(n)
    v = f(Z * x + (1.0 - Z) * b) - fb
    # eliminate the last attribution through sum(phi) == total
    A = Z[:, :-1] - Z[:, -1:]
    y = v - Z[:, -1] * total
    sw = np.sqrt(weights)
    phi_head = np.linalg.lstsq(A * sw[:, None], y * sw, rcond=None)[0]
    return np.append(phi_head, total - phi_head.sum())


def explain_points(method: str, f: DifferentiableFunction, points: PointSet, **kw) -> np.ndarray:
    """Run a baseline at every point; point ``n`` draws from RNG key ``(seed, n)``."""
    X = points.points
    if method == "smoothgrad":
        pert = kw["pert"]
        return np.stack([smoothgrad(f, x, pert, index=n) for n, x in enumerate(X)])
    if method == "lime":
        pert = kw["pert"]
        intercept = kw.get("intercept", True)
        width = kw.get("kernel_width")
        return np.stack([lime(f, x, pert, intercept, width, index=n) for n, x in enumerate(X)])
    if method == "kernel_shap":
        bg = kw.get("background")
        bg = points.bounds.mean(axis=1) if bg is None else np.asarray(bg, dtype=float)
        coalitions = kw.get("sample_coalitions", EXHAUSTIVE)
        seed = kw.get("seed", 0)
        return np.stack([kernel_shap(f, x, bg, coalitions, seed, index=n) for n, x in enumerate(X)])
    raise ValidationError(f"unknown baseline {method!r}")
