"""Hot inner loops, compiled when available.

The Cython extension ``_core`` is used if it was built; otherwise (or when the
environment variable ``PROPOPT_PURE_PYTHON`` is set to a non-empty value) the
numpy implementations in ``_fallback`` are used.  ``BACKEND`` records which.
"""

import os

import numpy as np

from . import _fallback

try:
    if os.environ.get("PROPOPT_PURE_PYTHON"):
        raise ImportError("pure-Python kernels requested")
    from . import _core as _impl
    BACKEND = "compiled"
except ImportError:
    _impl = _fallback
    BACKEND = "python"

__all__ = ["BACKEND", "pairwise_sq_sum", "masked_max_sq", "quadratic_gd", "fista_l1", "backends"]


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def backends():
    """Mapping of available backend name -> module (used by benchmarks and tests)."""
    out = {"python": _fallback}
    if _impl is not _fallback:
        out["compiled"] = _impl
    else:
        try:
            from . import _core
            out["compiled"] = _core
        except ImportError:
            pass
    return out


def pairwise_sq_sum(W, S):
    return _impl.pairwise_sq_sum(_f64(W), _f64(S))


def masked_max_sq(W, mask):
    return _impl.masked_max_sq(_f64(W), np.ascontiguousarray(mask, dtype=np.uint8))


def quadratic_gd(G, L, Lt, lf, lr, ls, step, n_steps, W0=None):
    G = _f64(G)
    W0 = G.copy() if W0 is None else _f64(W0)
    return _impl.quadratic_gd(G, _f64(L), _f64(Lt), float(lf), float(lr), float(ls),
                              float(step), int(n_steps), W0)


def fista_l1(G, L, Lt, lf, lr, ls, lc, lip, tol, max_iters, W0=None):
    G = _f64(G)
    W0 = G.copy() if W0 is None else _f64(W0)
    return _impl.fista_l1(G, _f64(L), _f64(Lt), float(lf), float(lr), float(ls), float(lc),
                          float(lip), float(tol), int(max_iters), W0)
