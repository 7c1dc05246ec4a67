"""Input and dimension similarity matrices, Laplacians and the joint precision.

All pair sums in this package run over *ordered* pairs, so for a Laplacian
``L = diag(S 1) - S``::

    sum_{n,n'} S[n,n'] |w_n - w_n'|^2 == 2 * trace(W.T @ L @ W)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import linalg

from .errors import ConvexityError, ValidationError
from .functions import PointSet

__all__ = [
    "SimilaritySpec",
    "SimilarityBundle",
    "kernel_eval",
    "kernel_matrix",
    "build_similarity",
    "build_laplacian",
    "build_dimension_similarity",
    "make_bundle",
    "build_joint_precision",
    "load_matrix_csv",
]

KINDS = ("threshold", "gaussian", "precision", "custom")


@dataclass(frozen=True)
class SimilaritySpec:
    """How to score similarity between input points.

    ``precision`` uses ``s = -k^{-1}``: the negated inverse of the
    ``base``-kernel matrix on the point set, regularized by ``ridge``.
    """

    kind: str = "gaussian"
    scale: float = 1.0
    ridge: float = 1e-8
    base: str = "gaussian"
    matrix: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown similarity kind {self.kind!r}; use one of {KINDS}")
        if self.kind == "custom":
            if self.matrix is None:
                raise ValidationError("custom similarity needs a matrix")
            object.__setattr__(self, "matrix", _check_square_symmetric(self.matrix, "custom similarity"))
            return
        if not (np.isfinite(self.scale) and self.scale > 0):
            raise ValidationError(f"similarity scale must be positive, got {self.scale}")
        if self.kind == "precision":
            if self.base not in ("gaussian", "threshold"):
                raise ValidationError(f"precision base kernel must be gaussian or threshold, got {self.base!r}")
            if not self.ridge >= 0:
                raise ValidationError("ridge must be nonnegative")


def _check_square_symmetric(M, what):
    M = np.array(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValidationError(f"{what} must be square, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValidationError(f"{what} has non-finite entries")
    if not np.allclose(M, M.T, rtol=0.0, atol=1e-12 * max(1.0, float(np.max(np.abs(M), initial=0.0)))):
        raise ValidationError(f"{what} must be symmetric")
    return 0.5 * (M + M.T)


def kernel_eval(kind: str, x, x_prime, scale: float) -> float:
    """Threshold ``1{|x-x'|^2 <= scale}`` or gaussian ``exp(-|x-x'|^2 / (2 scale^2))``."""
    x = np.asarray(x, dtype=float)
    x_prime = np.asarray(x_prime, dtype=float)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(x_prime))):
        raise ValidationError("kernel inputs must be finite")
    if not scale > 0:
        raise ValidationError("kernel scale must be positive")
    d2 = float(np.sum((x - x_prime) ** 2))
    return float(_kernel_from_sqdist(kind, d2, scale))


def _kernel_from_sqdist(kind, d2, scale):
    if kind == "threshold":
        return (d2 <= scale).astype(float) if isinstance(d2, np.ndarray) else float(d2 <= scale)
    if kind == "gaussian":
        return np.exp(-d2 / (2.0 * scale**2))
    raise ValidationError(f"no kernel named {kind!r}")


def _sqdist(X):
    # exact-symmetric pairwise squared distances
    diff = X[:, None, :] - X[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def kernel_matrix(points, kind: str, scale: float) -> np.ndarray:
    X = points.points if isinstance(points, PointSet) else np.atleast_2d(np.asarray(points, float))
    return _kernel_from_sqdist(kind, _sqdist(X), scale)


def build_similarity(points: PointSet, spec: SimilaritySpec) -> np.ndarray:
    """N x N similarity with zero diagonal."""
    if spec.kind == "custom":
        S = np.array(spec.matrix, dtype=float)
        if S.shape[0] != points.n:
            raise ValidationError(f"custom similarity is {S.shape[0]}x{S.shape[0]} but there are {points.n} points")
    elif spec.kind == "precision":
        K = kernel_matrix(points, spec.base, spec.scale)
        K[np.diag_indices_from(K)] += spec.ridge
        try:
            factor = linalg.cho_factor(K, lower=True)
        except linalg.LinAlgError:
            raise ConvexityError(
                f"kernel matrix on {points.n} points is not positive definite; "
                f"increase the ridge (currently {spec.ridge:g})"
            ) from None
        P = linalg.cho_solve(factor, np.eye(points.n))
        S = -0.5 * (P + P.T)
    else:
        S = kernel_matrix(points, spec.kind, spec.scale)
    np.fill_diagonal(S, 0.0)
    return S


def build_laplacian(S) -> np.ndarray:
    S = _check_square_symmetric(S, "similarity")
    L = -S.copy()
    np.fill_diagonal(L, 0.0)
    # diagonal as negated off-diagonal row sum so that L @ 1 == 0 holds
    L[np.diag_indices_from(L)] = -L.sum(axis=1)
    return L


def build_dimension_similarity(D: int, scheme: str = "chain", h: int | None = None,
                               w: int | None = None, matrix=None) -> np.ndarray:
    """D x D dimension similarity: chain neighbours, 4-neighbour pixel grid, or custom."""
    if scheme == "chain":
        St = np.zeros((D, D))
        idx = np.arange(D - 1)
        St[idx, idx + 1] = St[idx + 1, idx] = 1.0
        return St
    if scheme == "image-grid":
        if h is None or w is None or h * w != D:
            raise ValidationError(f"image-grid needs h * w == D (= {D}), got h={h}, w={w}")
        St = np.zeros((D, D))
        for r in range(h):
            for c in range(w):
                k = r * w + c
                if c + 1 < w:
                    St[k, k + 1] = St[k + 1, k] = 1.0
                if r + 1 < h:
                    St[k, k + w] = St[k + w, k] = 1.0
        return St
    if scheme == "custom":
        St = _check_square_symmetric(matrix, "dimension similarity")
        if St.shape[0] != D:
            raise ValidationError(f"dimension similarity must be {D}x{D}, got {St.shape}")
        St = St.copy()
        np.fill_diagonal(St, 0.0)
        return St
    if scheme == "none":
        return np.zeros((D, D))
    raise ValidationError(f"unknown dimension scheme {scheme!r}")


@dataclass(frozen=True)
class SimilarityBundle:
    S: np.ndarray
    S_tilde: np.ndarray
    L: np.ndarray = field(init=False)
    L_tilde: np.ndarray = field(init=False)

    def __post_init__(self):
        S = _check_square_symmetric(self.S, "similarity").copy()
        St = _check_square_symmetric(self.S_tilde, "dimension similarity").copy()
        np.fill_diagonal(S, 0.0)
        np.fill_diagonal(St, 0.0)
        for name, val in (("S", S), ("S_tilde", St), ("L", build_laplacian(S)),
                          ("L_tilde", build_laplacian(St))):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def n(self):
        return self.S.shape[0]

    @property
    def dim(self):
        return self.S_tilde.shape[0]

    def neighbor_mask(self) -> np.ndarray:
        """Pairs with positive similarity; the complete mask when S has no positive entry."""
        mask = self.S > 0
        if not mask.any():
            mask = ~np.eye(self.n, dtype=bool)
        return mask


def make_bundle(points: PointSet, spec: SimilaritySpec, dim_scheme: str = "chain", **dim_kw) -> SimilarityBundle:
    return SimilarityBundle(build_similarity(points, spec),
                            build_dimension_similarity(points.dim, dim_scheme, **dim_kw))


def build_joint_precision(bundle: SimilarityBundle, lam_robust: float, lam_smooth: float) -> np.ndarray:
    """``2 lr (L kron I_D) + 2 ls (I_N kron L~)`` for row-major (point-major) flattening.

    For flattened ``E = W.ravel()``, ``E @ Q @ E`` equals
    ``lr * robust_pairwise(W) + ls * smooth(W)``.
    """
    if lam_robust < 0 or lam_smooth < 0:
        raise ValidationError("property weights must be nonnegative")
    N, D = bundle.n, bundle.dim
    return (2.0 * lam_robust * np.kron(bundle.L, np.eye(D))
            + 2.0 * lam_smooth * np.kron(np.eye(N), bundle.L_tilde))


def load_matrix_csv(path) -> np.ndarray:
    """Header-free square symmetric CSV matrix."""
    path = Path(path)
    try:
        M = np.loadtxt(path, delimiter=",", ndmin=2)
    except FileNotFoundError:
        raise ValidationError(f"matrix file not found: {path}") from None
    except ValueError as exc:
        raise ValidationError(f"{path}: not a numeric CSV matrix ({exc})") from None
    return _check_square_symmetric(M, str(path))
