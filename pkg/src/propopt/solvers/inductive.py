"""Inductive explanations by GP MAP inference with inducing points.

Observed gradients at inducing points act as a unit-variance Gaussian
likelihood on the latent explanation; the prior precision over the union of
inducing and query points is either

* ``"laplacian"`` -- the joint precision
  ``Q = 2 lr (L kron I) + 2 ls (I kron L~)`` built from a similarity, which
  already annihilates constants, or
* ``"kernel"`` -- ``lr * (K + ridge I)^{-1} kron I + 2 ls (I kron L~)`` from a
  kernel matrix ``K``, corrected for the integrated-out constant mean
  ``mu ~ N(0, sigma2)``:  ``Q - Q 1 1' Q / (1' Q 1 + 1 / sigma2)``.

The MAP solves ``(D_lik + Sigma^{-1}) E = D_lik g`` where ``D_lik`` selects
inducing coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.sparse import csgraph, csr_matrix

from ..errors import RankError, SolverError, ValidationError
from ..functions import DifferentiableFunction, PointSet
from ..similarity import (SimilarityBundle, SimilaritySpec, build_dimension_similarity,
                          build_similarity, kernel_matrix)
from ._linalg import cholesky

__all__ = ["InductiveModel", "fit_inductive", "predict_inductive", "marginalized_precision"]

RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class InductiveModel:
    inducing: PointSet
    inducing_gradients: np.ndarray = field(repr=False)
    query: PointSet | None
    lam_robust: float
    lam_smooth: float
    sigma2: float
    spec: SimilaritySpec
    prior: str
    solution: np.ndarray = field(repr=False)
    residual: float

    @property
    def n_inducing(self):
        return self.inducing.n


def marginalized_precision(Q, sigma2):
    """Precision after integrating out a shared mean ``mu ~ N(0, sigma2)``."""
    u = Q.sum(axis=1)
    return Q - np.outer(u, u) / (float(u.sum()) + 1.0 / sigma2)


def _orphans(S, n_inducing, lam_robust):
    """Query indices whose point-graph component holds no inducing point.

    The flattened coupling graph is the Cartesian product of the point graph
    and the dimension graph, and every coordinate of an inducing point is
    observed, so decoupling is decided on the point graph alone.
    """
    N = S.shape[0]
    adj = csr_matrix(S != 0) if lam_robust > 0 else csr_matrix((N, N))
    _, labels = csgraph.connected_components(adj, directed=False)
    anchored = set(labels[:n_inducing].tolist())
    return [i - n_inducing for i in range(n_inducing, N) if labels[i] not in anchored]


def fit_inductive(inducing: PointSet, f: DifferentiableFunction | None, query: PointSet | None,
                  spec: SimilaritySpec, lam_robust: float, lam_smooth: float = 0.0,
                  sigma2: float = 1e6, *, prior: str = "laplacian", dim_scheme: str = "chain",
                  inducing_gradients=None, **dim_kw) -> InductiveModel:
    """Fit the joint MAP explanation over inducing and query points.

    Either ``f`` or ``inducing_gradients`` supplies the observed gradients.

    Raises
    ------
    RankError
        If some query point is not coupled, directly or transitively, to any
        inducing point (e.g. ``lam_robust = 0`` with queries present).
    ConvexityError
        If the system matrix is not positive definite.
    """
    if lam_robust < 0 or lam_smooth < 0:
        raise ValidationError("property weights must be nonnegative")
    if not sigma2 > 0:
        raise ValidationError("sigma2 must be positive")
    if prior not in ("laplacian", "kernel"):
        raise ValidationError(f"prior must be 'laplacian' or 'kernel', got {prior!r}")
    if query is not None and query.dim != inducing.dim:
        raise ValidationError("inducing and query points differ in dimension")
    if inducing_gradients is None:
        if f is None:
            raise ValidationError("need f or inducing_gradients")
        g = f.grad(inducing.points)
    else:
        g = np.array(inducing_gradients, dtype=float)
    if g.shape != inducing.points.shape:
        raise ValidationError(f"inducing gradients {g.shape} do not match inducing points {inducing.points.shape}")

    union = inducing if query is None else inducing.union(query)
    M, N, D = inducing.n, union.n, union.dim
    St = build_dimension_similarity(D, dim_scheme, **dim_kw)
    Lt = SimilarityBundle(np.zeros((1, 1)), St).L_tilde
    sel = np.zeros(N)
    sel[:M] = 1.0
    rhs = np.zeros((N, D))
    rhs[:M] = g

    if prior == "laplacian":
        S = build_similarity(union, spec)
        orphans = _orphans(S, M, lam_robust)
        if orphans:
            shown = ", ".join(map(str, orphans[:10])) + (" ..." if len(orphans) > 10 else "")
            raise RankError(
                f"{len(orphans)} query point(s) are decoupled from every inducing point "
                f"(query indices {shown}); increase lam_robust or the similarity scale"
            )
        L = SimilarityBundle(S, St).L
        if lam_smooth == 0.0:
            A = 2.0 * lam_robust * L
            A[np.diag_indices(N)] += sel
            E = linalg.cho_solve(cholesky(A, "inductive system matrix"), rhs)
            residual = float(np.linalg.norm(A @ E - rhs))
        else:
            A = (2.0 * lam_robust * np.kron(L, np.eye(D)) + 2.0 * lam_smooth * np.kron(np.eye(N), Lt))
            E, residual = _dense_solve(A, sel, rhs)
    else:
        kind = spec.base if spec.kind == "precision" else spec.kind
        if kind not in ("gaussian", "threshold"):
            raise ValidationError("kernel prior needs a gaussian, threshold or precision similarity spec")
        K = kernel_matrix(union, kind, spec.scale)
        K[np.diag_indices(N)] += spec.ridge
        Kinv = linalg.cho_solve(cholesky(K, "kernel matrix"), np.eye(N))
        Kinv = 0.5 * (Kinv + Kinv.T)
        Q = lam_robust * np.kron(Kinv, np.eye(D))
        if lam_smooth:
            Q += 2.0 * lam_smooth * np.kron(np.eye(N), Lt)
        E, residual = _dense_solve(marginalized_precision(Q, sigma2), sel, rhs)

    scale = 1.0 + float(np.linalg.norm(rhs))
    if residual > RESIDUAL_TOL * scale:
        raise SolverError(f"inductive solve residual {residual:.3e} exceeds {RESIDUAL_TOL * scale:.3e}")
    E.setflags(write=False)
    return InductiveModel(inducing, g, query, float(lam_robust), float(lam_smooth), float(sigma2),
                          spec, prior, E, residual)


def _dense_solve(prec, sel, rhs):
    N, D = rhs.shape
    A = prec.copy()
    A[np.diag_indices(N * D)] += np.repeat(sel, D)
    b = rhs.ravel()
    e = linalg.cho_solve(cholesky(A, "inductive system matrix"), b)
    return e.reshape(N, D), float(np.linalg.norm(A @ e - b))


def predict_inductive(model: InductiveModel) -> np.ndarray:
    """Explanations at the query points (rows follow the query order)."""
    return np.array(model.solution[model.n_inducing:])
