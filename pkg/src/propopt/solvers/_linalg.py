"""Dense linear-algebra plumbing shared by the solvers."""

import numpy as np
from scipy import linalg

from ..errors import ConvexityError


def cholesky(A, what="system matrix"):
    """``cho_factor`` that reports failure as a :class:`ConvexityError`."""
    try:
        return linalg.cho_factor(A, lower=True, check_finite=True)
    except linalg.LinAlgError:
        raise ConvexityError(f"{what} is not positive definite; the objective is not strictly convex") from None


def power_iteration(apply, shape, seed=0, tol=1e-12, max_iter=5000):
    """Largest-magnitude eigenvalue of the symmetric operator ``apply``."""
    v = np.random.default_rng(seed).standard_normal(shape)
    v /= np.linalg.norm(v)
    rq = 0.0
    for _ in range(max_iter):
        w = apply(v)
        rq_new = float(np.sum(v * w))
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            return 0.0
        v = w / nrm
        if abs(rq_new - rq) <= tol * abs(rq_new):
            return rq_new
        rq = rq_new
    return rq


def group_eigenvalues(values, rtol=1e-12):
    """Index groups of (numerically) equal eigenvalues, in ascending order."""
    order = np.argsort(values)
    scale = max(1.0, float(np.max(np.abs(values), initial=0.0)))
    groups, current = [], [order[0]]
    for i in order[1:]:
        if values[i] - values[current[-1]] <= rtol * scale:
            current.append(i)
        else:
            groups.append(current)
            current = [i]
    groups.append(current)
    return [np.array(g) for g in groups]
