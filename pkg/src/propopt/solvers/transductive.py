"""Explanations optimized jointly over a fixed point set.

The smooth part of every transductive objective is::

    F(W) = lf |W - G|_F^2 + 2 lr tr(W' L W) + 2 ls tr(W L~ W')

whose stationarity condition is the Sylvester equation
``(lf I + 2 lr L) W + 2 ls W L~ = lf G``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .. import _kernels
from ..errors import ConvexityError, IterationLimitError, SolverError, ValidationError
from ..functions import DifferentiableFunction, PointSet
from ..losses import PropertyWeights
from ..similarity import SimilarityBundle
from ._linalg import cholesky, group_eigenvalues, power_iteration

__all__ = [
    "TransductiveProblem",
    "solve_quadratic",
    "solve_l1",
    "smooth_objective",
    "kkt_residual",
    "lipschitz_constant",
]


@dataclass(frozen=True)
class TransductiveProblem:
    points: PointSet
    gradients: np.ndarray
    bundle: SimilarityBundle
    weights: PropertyWeights
    solver_tol: float = 1e-8
    max_iters: int = 50000

    def __post_init__(self):
        G = np.array(self.gradients, dtype=float)
        if G.shape != self.points.points.shape:
            raise ValidationError(f"gradients {G.shape} do not match points {self.points.points.shape}")
        if not np.all(np.isfinite(G)):
            raise ValidationError("gradients contain non-finite entries")
        if self.bundle.n != self.points.n or self.bundle.dim != self.points.dim:
            raise ValidationError("similarity bundle does not match the point set")
        if not self.solver_tol > 0 or self.max_iters < 1:
            raise ValidationError("solver_tol must be positive and max_iters at least 1")
        G.setflags(write=False)
        object.__setattr__(self, "gradients", G)

    @classmethod
    def from_function(cls, points: PointSet, f: DifferentiableFunction, bundle: SimilarityBundle,
                      weights: PropertyWeights, **kw) -> "TransductiveProblem":
        return cls(points, f.grad(points.points), bundle, weights, **kw)

    @property
    def lams(self):
        w = self.weights
        return w.lambda_faithful, w.lambda_robust, w.lambda_smooth, w.lambda_complex


def _require(problem, *, complexity_ok):
    w = problem.weights
    if w.faithfulness_form != "gradient-match":
        raise ValidationError("transductive solvers support gradient-match faithfulness only")
    if w.lambda_faithful <= 0:
        raise ValidationError("lambda_faithful must be positive (the minimizer is not unique otherwise)")
    if w.robustness_form != "pairwise":
        raise ValidationError("use solve_maxdiff for max-difference robustness")
    if not complexity_ok and w.lambda_complex != 0:
        raise ValidationError("lambda_complex > 0 needs solve_l1")


def smooth_objective(W, problem: TransductiveProblem) -> float:
    lf, lr, ls, _ = problem.lams
    b = problem.bundle
    return float(lf * np.sum((W - problem.gradients) ** 2) + 2.0 * lr * np.sum(W * (b.L @ W))
                 + 2.0 * ls * np.sum(W * (W @ b.L_tilde)))


def kkt_residual(W, problem: TransductiveProblem) -> float:
    """Frobenius norm of the Sylvester stationarity residual."""
    lf, lr, ls, _ = problem.lams
    b = problem.bundle
    R = lf * W + 2.0 * lr * (b.L @ W) + 2.0 * ls * (W @ b.L_tilde) - lf * problem.gradients
    return float(np.linalg.norm(R))


def _sylvester_solver(L, Lt, lf, lr, ls):
    """Return ``solve(R)`` for ``(lf I + 2 lr L) W + 2 ls W Lt = R``."""
    N = L.shape[0]
    if ls == 0.0:
        nu, V = np.zeros(1), None
        groups = [np.array([0])]
    else:
        nu, V = linalg.eigh(Lt)
        groups = group_eigenvalues(nu)
    base = 2.0 * lr * L
    base[np.diag_indices(N)] += lf
    factors = []
    for g in groups:
        A = base.copy()
        A[np.diag_indices(N)] += 2.0 * ls * float(np.mean(nu[g]))
        factors.append((g, cholesky(A, "shifted system matrix lf*I + 2lr*L + 2ls*nu*I")))

    def solve(R):
        Rv = R if V is None else R @ V
        Y = np.empty_like(Rv)
        for g, fac in factors:
            cols = slice(None) if V is None else g
            Y[:, cols] = linalg.cho_solve(fac, Rv[:, cols])
        return Y if V is None else Y @ V.T

    return solve


def solve_quadratic(problem: TransductiveProblem) -> np.ndarray:
    """Unique minimizer of the faithfulness + pairwise robustness + smoothness quadratic.

    Eigendecomposes the D x D dimension Laplacian and factorizes one shifted
    N x N matrix per distinct eigenvalue.  The Sylvester residual is certified
    against ``solver_tol * (1 + |G|_F)`` (one refinement step is allowed).

    Raises
    ------
    ConvexityError
        If a shifted system is not positive definite (possible with
        precision-kind similarities, whose Laplacian can be indefinite).
    """
    _require(problem, complexity_ok=False)
    lf, lr, ls, _ = problem.lams
    G = problem.gradients
    if lr == 0.0 and ls == 0.0:
        return G.copy()
    b = problem.bundle
    solve = _sylvester_solver(b.L, b.L_tilde, lf, lr, ls)
    W = solve(lf * G)
    bound = problem.solver_tol * (1.0 + float(np.linalg.norm(G)))
    res = kkt_residual(W, problem)
    if res > bound:
        R = lf * W + 2.0 * lr * (b.L @ W) + 2.0 * ls * (W @ b.L_tilde) - lf * G
        W = W - solve(R)
        res = kkt_residual(W, problem)
        if res > bound:
            raise SolverError(f"KKT residual {res:.3e} exceeds {bound:.3e} after refinement")
    return W


def lipschitz_constant(problem: TransductiveProblem, seed=0) -> float:
    """Largest eigenvalue of the smooth part's Hessian, by power iteration."""
    lf, lr, ls, _ = problem.lams
    b = problem.bundle
    hess = lambda V: 2.0 * lf * V + 4.0 * lr * (b.L @ V) + 4.0 * ls * (V @ b.L_tilde)
    return power_iteration(hess, problem.gradients.shape, seed=seed)


def _check_convex(problem):
    lf, lr, ls, _ = problem.lams
    b = problem.bundle
    low = lf
    if lr:
        low += 2.0 * lr * float(linalg.eigvalsh(b.L)[0])
    if ls:
        low += 2.0 * ls * float(linalg.eigvalsh(b.L_tilde)[0])
    if low <= 0.0:
        raise ConvexityError(f"smooth part has Hessian eigenvalue {2 * low:.3e} <= 0; the objective is not convex")


def solve_l1(problem: TransductiveProblem) -> np.ndarray:
    """Minimize the smooth quadratic plus ``lambda_complex * sum |W|`` by FISTA.

    Step size is ``1/L`` with ``L`` from power iteration (padded by 0.1% since
    power iteration approaches the top eigenvalue from below).  Momentum is
    restarted whenever the objective would increase, so the objective sequence
    is non-increasing.  Iteration starts from ``G``.
    """
    _require(problem, complexity_ok=True)
    _check_convex(problem)
    lf, lr, ls, lc = problem.lams
    b = problem.bundle
    lip = lipschitz_constant(problem) * 1.001
    W, iters, converged, _, last = _kernels.fista_l1(
        problem.gradients, b.L, b.L_tilde, lf, lr, ls, lc, lip,
        problem.solver_tol, problem.max_iters,
    )
    if not converged:
        raise IterationLimitError(
            f"FISTA did not converge in {iters} iterations (last step {last:.3e})", last_gap=last
        )
    return W
