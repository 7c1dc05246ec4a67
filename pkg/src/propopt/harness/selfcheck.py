"""Quick oracle self-tests run by ``propopt check``.

Each check returns its maximum residual against an independent oracle and
the tolerance it must meet.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import factorial

import numpy as np

from .. import _kernels
from ..baselines import kernel_shap
from ..functions import BENCHMARKS, PointSet, generate_points, gradient_check, make_benchmark, mlp_from_spec, random_mlp
from ..losses import PropertyWeights
from ..similarity import SimilarityBundle, SimilaritySpec, kernel_matrix, make_bundle
from ..solvers import TransductiveProblem, fit_inductive, smooth_objective, solve_l1, solve_maxdiff, solve_quadratic

__all__ = ["CheckResult", "run_checks", "shapley_enumeration"]

_DEFAULT_PARAMS = {"power": [3], "linear": None}


@dataclass(frozen=True)
class CheckResult:
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self):
        return bool(np.isfinite(self.residual) and self.residual <= self.tolerance)


def shapley_enumeration(value, D):
    """Exact Shapley values of the set function ``value(mask)`` by enumeration."""
    phi = np.zeros(D)
    for i in range(D):
        others = [j for j in range(D) if j != i]
        for k in range(D):
            w = factorial(k) * factorial(D - k - 1) / factorial(D)
            for S in itertools.combinations(others, k):
                m = np.zeros(D, bool)
                m[list(S)] = True
                with_i = m.copy()
                with_i[i] = True
                phi[i] += w * (value(with_i) - value(m))
    return phi


def _gradients():
    rng = np.random.default_rng(0)
    X = rng.uniform(-2, 2, size=(20, 3))
    worst = 0.0
    for name in BENCHMARKS:
        params = _DEFAULT_PARAMS.get(name, [])
        params = [1.0, -2.0, 0.5] if params is None else params
        worst = max(worst, gradient_check(make_benchmark(name, 3, params), X))
    worst = max(worst, gradient_check(mlp_from_spec(random_mlp(3, seed=0)), X))
    return worst


def _two_point():
    pts = PointSet(np.array([[0.0], [1.0]]), [(-1.0, 2.0)])
    S = np.array([[0.0, 1.0], [1.0, 0.0]])
    bundle = SimilarityBundle(S, np.zeros((1, 1)))
    prob = TransductiveProblem(pts, [[0.0], [3.0]], bundle, PropertyWeights(1.0, 1.0))
    return float(np.max(np.abs(solve_quadratic(prob).ravel() - [1.2, 1.8])))


def _gd_oracle():
    worst = 0.0
    for seed in range(3):
        rng = np.random.default_rng(seed)
        pts = generate_points(2, "uniform", 5, seed=seed)
        bundle = make_bundle(pts, SimilaritySpec("gaussian", 3.0))
        w = PropertyWeights(1.0, float(rng.uniform(0.1, 2)), float(rng.uniform(0, 1)))
        prob = TransductiveProblem(pts, rng.normal(size=(5, 2)), bundle, w)
        W = solve_quadratic(prob)
        lf, lr, ls, _ = prob.lams
        top = 2 * lf + 4 * lr * np.linalg.eigvalsh(bundle.L)[-1] + 4 * ls * np.linalg.eigvalsh(bundle.L_tilde)[-1]
        V = _kernels.quadratic_gd(prob.gradients, bundle.L, bundle.L_tilde, lf, lr, ls, 1.0 / top, 100000)
        worst = max(worst, abs(smooth_objective(V, prob) - smooth_objective(W, prob)))
    return worst


def _soft_threshold():
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(20):
        g, lf, lc = rng.normal(0, 2), rng.uniform(0.5, 2), rng.uniform(0, 3)
        pts = PointSet(np.zeros((1, 1)), [(-1.0, 1.0)])
        bundle = SimilarityBundle(np.zeros((1, 1)), np.zeros((1, 1)))
        prob = TransductiveProblem(pts, [[g]], bundle, PropertyWeights(lf, 0.0, 0.0, lc), solver_tol=1e-12)
        exact = np.sign(g) * max(abs(g) - lc / (2 * lf), 0.0)
        worst = max(worst, abs(float(solve_l1(prob)[0, 0]) - exact))
    return worst


def _maxdiff_pair():
    # two points: the max term is the single pair, so the difference shrinks by 1 / (1 + 2 lr)
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(5):
        g = rng.normal(size=(2, 2))
        lr = rng.uniform(0.1, 5)
        pts = PointSet(np.array([[0.0, 0.0], [1.0, 1.0]]), [(-1.0, 2.0)] * 2)
        bundle = SimilarityBundle(np.array([[0.0, 1.0], [1.0, 0.0]]), np.zeros((2, 2)))
        prob = TransductiveProblem(pts, g, bundle, PropertyWeights(1.0, lr, robustness_form="max-difference"),
                                   solver_tol=1e-10)
        W = solve_maxdiff(prob)
        d = (g[0] - g[1]) / (1 + 2 * lr)
        m = g.mean(axis=0)
        worst = max(worst, float(np.max(np.abs(W - np.stack([m + d / 2, m - d / 2])))))
    return worst


def _covariance_form():
    worst = 0.0
    sigma2 = 1e6
    for seed in range(3):
        rng = np.random.default_rng(seed)
        pts = PointSet(rng.uniform(-1, 1, size=(5, 2)), [(-1, 1)] * 2)
        g = rng.normal(size=(5, 2))
        spec = SimilaritySpec("gaussian", 1.0, ridge=1e-10)
        model = fit_inductive(pts, None, None, spec, 1.0, 0.0, sigma2, prior="kernel", inducing_gradients=g)
        K = kernel_matrix(pts, "gaussian", 1.0) + 1e-10 * np.eye(5)
        # one shared mean for every point and dimension
        C = np.kron(K, np.eye(2)) + sigma2 * np.ones((10, 10))
        ref = (C @ np.linalg.solve(C + np.eye(10), g.ravel())).reshape(5, 2)
        worst = max(worst, float(np.max(np.abs(model.solution - ref))))
    return worst


def _shapley():
    f = make_benchmark("polynomial-cross", 3)
    x, b = np.array([1.0, -2.0, 0.5]), np.zeros(3)
    exact = shapley_enumeration(lambda m: float(f(np.where(m, x, b))), 3)
    return float(np.max(np.abs(kernel_shap(f, x, b) - exact)))


def _backends():
    rng = np.random.default_rng(3)
    W, S = rng.normal(size=(30, 4)), rng.uniform(size=(30, 30))
    vals = [mod.pairwise_sq_sum(W, S) for mod in _kernels.backends().values()]
    return float(max(vals) - min(vals)) / max(1.0, abs(vals[0]))


CHECKS = (
    ("gradient_check(benchmarks, mlp)", _gradients, 1e-5),
    ("solve_quadratic two-point closed form", _two_point, 1e-10),
    ("solve_quadratic vs gradient descent (objective)", _gd_oracle, 1e-6),
    ("solve_l1 vs soft-threshold", _soft_threshold, 1e-6),
    ("solve_maxdiff two-point closed form", _maxdiff_pair, 1e-6),
    ("inductive MAP vs covariance-form posterior mean", _covariance_form, 1e-4),
    ("kernel_shap vs Shapley enumeration", _shapley, 1e-6),
    ("compiled vs python kernels (relative)", _backends, 1e-12),
)


def run_checks():
    return [CheckResult(name, float(fn()), tol) for name, fn, tol in CHECKS]
