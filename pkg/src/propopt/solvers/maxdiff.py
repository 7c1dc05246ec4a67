"""Faithfulness plus max-difference robustness.

Minimizes ``lf |W - G|^2 + lr * max_{(n,m) in mask} |w_n - w_m|^2`` through its
epigraph form

    minimize   lf |W - G|^2 + lr t
    subject to |w_n - w_m|^2 <= t     for every masked pair

with a log-barrier interior-point method (damped Newton centering, barrier
weight grown geometrically until the duality-gap bound ``P / tau`` is below
tolerance).  The best primal objective seen across iterates is returned.
"""

from __future__ import annotations

import numpy as np
from scipy import linalg

from .. import _kernels
from ..errors import IterationLimitError, ValidationError
from .transductive import TransductiveProblem

__all__ = ["solve_maxdiff", "maxdiff_objective"]

_GROWTH = 20.0
_CENTERING_STEPS = 100


def _pairs(mask):
    iu, ju = np.nonzero(np.triu(np.logical_or(mask, mask.T), k=1))
    return iu, ju


def maxdiff_objective(W, G, mask, lf, lr):
    value, i, _ = _kernels.masked_max_sq(W, mask)
    if i < 0:
        raise ValidationError("neighbor mask has no off-diagonal pair")
    return float(lf * np.sum((W - G) ** 2) + lr * value)


def solve_maxdiff(problem: TransductiveProblem, neighbor_mask=None) -> np.ndarray:
    """Minimizer of gradient-match faithfulness + max-difference robustness.

    ``neighbor_mask`` defaults to ``problem.bundle.neighbor_mask()``.
    """
    w = problem.weights
    if w.robustness_form != "max-difference":
        raise ValidationError("solve_maxdiff needs robustness_form='max-difference'")
    if w.faithfulness_form != "gradient-match":
        raise ValidationError("transductive solvers support gradient-match faithfulness only")
    if w.lambda_smooth != 0 or w.lambda_complex != 0:
        raise ValidationError("solve_maxdiff supports lambda_smooth = lambda_complex = 0 only")
    if w.lambda_faithful <= 0:
        raise ValidationError("lambda_faithful must be positive")
    G = problem.gradients
    N, D = G.shape
    mask = problem.bundle.neighbor_mask() if neighbor_mask is None else np.asarray(neighbor_mask, bool)
    if mask.shape != (N, N):
        raise ValidationError(f"neighbor mask must be {N}x{N}")
    mask = mask & ~np.eye(N, dtype=bool)
    I, J = _pairs(mask)
    if len(I) == 0:
        raise ValidationError("neighbor mask has no off-diagonal pair")
    lf, lr = w.lambda_faithful, w.lambda_robust
    if lr == 0.0:
        return G.copy()
    return _barrier(G, I, J, mask, lf, lr, problem.solver_tol, problem.max_iters)


def _barrier(G, I, J, mask, lf, lr, tol, max_iters):
    N, D = G.shape
    P = len(I)
    nv = N * D + 1
    W = G.copy()
    t = float(np.max(np.sum((W[I] - W[J]) ** 2, axis=1))) * 1.5 + 1.0

    def primal(W, t):
        return lf * float(np.sum((W - G) ** 2)) + lr * t

    def barrier(W, t, tau):
        s = t - np.sum((W[I] - W[J]) ** 2, axis=1)
        if np.min(s) <= 0.0:
            return np.inf
        return tau * primal(W, t) - float(np.sum(np.log(s)))

    best_W = W.copy()
    best_f = maxdiff_objective(W, G, mask, lf, lr)
    tau = P / max(primal(W, t), 1.0)
    steps = 0
    eye_d = np.eye(D)
    while True:
        for _ in range(_CENTERING_STEPS):
            dW = W[I] - W[J]
            u = 1.0 / (t - np.sum(dW**2, axis=1))
            gq = 2.0 * dW
            # gradient of the barrier objective
            gW = tau * 2.0 * lf * (W - G)
            np.add.at(gW, I, gq * u[:, None])
            np.add.at(gW, J, -gq * u[:, None])
            grad = np.concatenate([gW.ravel(), [tau * lr - float(np.sum(u))]])
            # Hessian: curvature of each q_p / s_p plus the outer products
            lap = np.zeros((N, N))
            np.add.at(lap, (I, I), 2.0 * u)
            np.add.at(lap, (J, J), 2.0 * u)
            np.add.at(lap, (I, J), -2.0 * u)
            np.add.at(lap, (J, I), -2.0 * u)
            H = lap[:, :, None, None] * eye_d
            u2 = u**2
            B = u2[:, None, None] * gq[:, :, None] * gq[:, None, :]
            np.add.at(H, (I, I), B)
            np.add.at(H, (J, J), B)
            np.add.at(H, (I, J), -B)
            np.add.at(H, (J, I), -B)
            Hf = np.empty((nv, nv))
            Hf[:-1, :-1] = H.transpose(0, 2, 1, 3).reshape(N * D, N * D)
            Hf[np.arange(N * D), np.arange(N * D)] += tau * 2.0 * lf
            cross = np.zeros((N, D))
            np.add.at(cross, I, -gq * u2[:, None])
            np.add.at(cross, J, gq * u2[:, None])
            Hf[:-1, -1] = Hf[-1, :-1] = cross.ravel()
            Hf[-1, -1] = float(np.sum(u2))
            try:
                step = -linalg.cho_solve(linalg.cho_factor(Hf, lower=True), grad)
            except linalg.LinAlgError:
                step = -linalg.lstsq(Hf, grad)[0]
            steps += 1
            dec = -float(grad @ step)
            if dec <= 2e-12 or steps >= max_iters:
                break
            sW, st = step[:-1].reshape(N, D), step[-1]
            cur = barrier(W, t, tau)
            a = 1.0
            while barrier(W + a * sW, t + a * st, tau) > cur - 0.25 * a * dec:
                a *= 0.5
                if a < 1e-14:
                    break
            if a < 1e-14:
                break
            W, t = W + a * sW, t + a * st
            f = maxdiff_objective(W, G, mask, lf, lr)
            if f < best_f:
                best_f, best_W = f, W.copy()
        gap = P / tau
        if gap <= tol * max(1.0, best_f):
            return best_W
        if steps >= max_iters:
            raise IterationLimitError(
                f"barrier method stopped after {steps} Newton steps with gap bound {gap:.3e}",
                last_gap=gap,
            )
        tau *= _GROWTH
