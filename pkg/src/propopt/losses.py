"""Property losses for an explanation matrix ``W`` (N x D, row n explains x_n)."""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from . import _kernels
from .errors import ValidationError
from .functions import DifferentiableFunction, PointSet
from .similarity import SimilarityBundle

__all__ = [
    "PropertyWeights",
    "LossReport",
    "LOSS_NAMES",
    "loss_faithful_grad",
    "loss_faithful_fn",
    "loss_robust_pairwise",
    "loss_robust_maxdiff",
    "loss_smooth",
    "loss_complexity",
    "evaluate_all",
]

FAITHFULNESS_FORMS = ("gradient-match", "function-match")
ROBUSTNESS_FORMS = ("pairwise", "max-difference")


@dataclass(frozen=True)
class PropertyWeights:
    lambda_faithful: float = 1.0
    lambda_robust: float = 0.0
    lambda_smooth: float = 0.0
    lambda_complex: float = 0.0
    faithfulness_form: str = "gradient-match"
    robustness_form: str = "pairwise"

    def __post_init__(self):
        lams = self.lambdas()
        if any(not np.isfinite(v) or v < 0 for v in lams):
            raise ValidationError(f"property weights must be finite and nonnegative, got {lams}")
        if not any(v > 0 for v in lams):
            raise ValidationError("at least one property weight must be positive")
        if self.faithfulness_form not in FAITHFULNESS_FORMS:
            raise ValidationError(f"faithfulness_form must be one of {FAITHFULNESS_FORMS}")
        if self.robustness_form not in ROBUSTNESS_FORMS:
            raise ValidationError(f"robustness_form must be one of {ROBUSTNESS_FORMS}")

    def lambdas(self):
        return (self.lambda_faithful, self.lambda_robust, self.lambda_smooth, self.lambda_complex)


@dataclass(frozen=True)
class LossReport:
    """Unweighted losses plus the weighted total under the selected forms."""

    faithful_grad: float
    faithful_fn: float
    robust_pair: float
    robust_max: float
    smooth: float
    complex: float
    total: float

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


LOSS_NAMES = tuple(f.name for f in fields(LossReport))


def _matrix(W, what="explanation matrix"):
    W = np.asarray(W, dtype=float)
    if W.ndim != 2:
        raise ValidationError(f"{what} must be 2-D, got shape {W.shape}")
    if not np.all(np.isfinite(W)):
        raise ValidationError(f"{what} has non-finite entries")
    return W


def _same_shape(A, B, a="W", b="G"):
    if A.shape != B.shape:
        raise ValidationError(f"shape mismatch: {a} is {A.shape}, {b} is {B.shape}")


def loss_faithful_grad(W, G) -> float:
    W, G = _matrix(W), _matrix(G, "gradient matrix")
    _same_shape(W, G)
    return float(np.sum((W - G) ** 2))


def loss_faithful_fn(W, points: PointSet, f: DifferentiableFunction) -> float:
    """Sum of squared residuals of the linear models ``w_n . x_n`` against ``f(x_n)``."""
    W = _matrix(W)
    X = points.points
    _same_shape(W, X, "W", "points")
    return float(np.sum((f(X) - np.einsum("nd,nd->n", W, X)) ** 2))


def _pair_matrix(M, n, what):
    M = np.asarray(M)
    if M.shape != (n, n):
        raise ValidationError(f"{what} must be {n}x{n}, got {M.shape}")
    return M


def loss_robust_pairwise(W, S) -> float:
    W = _matrix(W)
    S = _pair_matrix(S, W.shape[0], "similarity").astype(float)
    if not np.allclose(S, S.T, rtol=0, atol=1e-12 * max(1.0, float(np.max(np.abs(S), initial=0)))):
        raise ValidationError("similarity must be symmetric")
    return float(_kernels.pairwise_sq_sum(W, S))


def loss_robust_maxdiff(W, neighbor_mask) -> float:
    W = _matrix(W)
    mask = _pair_matrix(neighbor_mask, W.shape[0], "neighbor mask").astype(bool)
    if not np.array_equal(mask, mask.T):
        raise ValidationError("neighbor mask must be symmetric")
    value, i, _ = _kernels.masked_max_sq(W, mask & ~np.eye(len(mask), dtype=bool))
    if i < 0:
        raise ValidationError("neighbor mask has no off-diagonal pair")
    return float(value)


def loss_smooth(W, S_tilde) -> float:
    W = _matrix(W)
    St = _pair_matrix(S_tilde, W.shape[1], "dimension similarity").astype(float)
    diff = W[:, :, None] - W[:, None, :]
    return float(np.einsum("nij,ij->", diff**2, St))


def loss_complexity(W) -> float:
    return float(np.sum(np.abs(_matrix(W))))


def evaluate_all(W, points: PointSet, f: DifferentiableFunction, bundle: SimilarityBundle,
                 weights: PropertyWeights, G=None) -> LossReport:
    """Score ``W`` on every property.  ``G`` defaults to the exact gradients of ``f``.

    ``robust_max`` is NaN when the neighbour mask is empty and max-difference is
    not the selected robustness form.
    """
    W = _matrix(W)
    G = f.grad(points.points) if G is None else _matrix(G, "gradient matrix")
    fg = loss_faithful_grad(W, G)
    ff = loss_faithful_fn(W, points, f)
    rp = loss_robust_pairwise(W, bundle.S)
    try:
        rm = loss_robust_maxdiff(W, bundle.neighbor_mask())
    except ValidationError:
        if weights.robustness_form == "max-difference":
            raise
        rm = float("nan")
    sm = loss_smooth(W, bundle.S_tilde)
    cx = loss_complexity(W)
    faithful = fg if weights.faithfulness_form == "gradient-match" else ff
    robust = rp if weights.robustness_form == "pairwise" else rm
    total = (weights.lambda_faithful * faithful + weights.lambda_robust * robust
             + weights.lambda_smooth * sm + weights.lambda_complex * cx)
    return LossReport(fg, ff, rp, rm, sm, cx, float(total))


def weighted_total(report: LossReport, weights: PropertyWeights) -> float:
    """Recompute the total of ``report`` under (possibly different) ``weights``."""
    faithful = report.faithful_grad if weights.faithfulness_form == "gradient-match" else report.faithful_fn
    robust = report.robust_pair if weights.robustness_form == "pairwise" else report.robust_max
    return float(weights.lambda_faithful * faithful + weights.lambda_robust * robust
                 + weights.lambda_smooth * report.smooth + weights.lambda_complex * report.complex)
