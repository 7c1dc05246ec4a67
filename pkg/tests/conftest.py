import time
from contextlib import contextmanager

import numpy as np
import pytest

from propopt.functions import PointSet
from propopt.losses import PropertyWeights
from propopt.similarity import SimilarityBundle, SimilaritySpec, build_dimension_similarity, make_bundle
from propopt.solvers import TransductiveProblem


def two_point_problem(lf=1.0, lr=1.0, ls=0.0, lc=0.0, G=((0.0,), (3.0,)), form="pairwise", **kw):
    """D=1 points {0, 1}, S12 = 1, gradients of x^3 by default."""
    G = np.asarray(G, dtype=float)
    D = G.shape[1]
    pts = PointSet(np.array([[0.0] * D, [1.0] * D]), [(-1.0, 2.0)] * D)
    bundle = SimilarityBundle(np.array([[0.0, 1.0], [1.0, 0.0]]), build_dimension_similarity(D))
    return TransductiveProblem(pts, G, bundle, PropertyWeights(lf, lr, ls, lc, robustness_form=form), **kw)


def random_problem(seed, N=None, D=None, lr=None, ls=None, lc=0.0, form="pairwise", scale=None, **kw):
    rng = np.random.default_rng(seed)
    N = int(rng.integers(2, 9)) if N is None else N
    D = int(rng.integers(1, 4)) if D is None else D
    pts = PointSet(rng.uniform(-1, 1, size=(N, D)), [(-1, 1)] * D)
    scale = float(rng.uniform(0.5, 2.0)) if scale is None else scale
    bundle = make_bundle(pts, SimilaritySpec("gaussian", scale))
    lr = float(rng.uniform(0.05, 3.0)) if lr is None else lr
    ls = float(rng.uniform(0.0, 2.0)) if ls is None else ls
    w = PropertyWeights(float(rng.uniform(0.5, 2.0)), lr, ls, lc, robustness_form=form)
    return TransductiveProblem(pts, rng.normal(0, 2, size=(N, D)), bundle, w, **kw)


@pytest.fixture
def two_point():
    return two_point_problem


# acceptance reporting -------------------------------------------------------

ACCEPTANCE = {}


@contextmanager
def criterion(number, title):
    """Record one PASS/FAIL line for an acceptance criterion.

    The block may store a short ``detail`` string in the yielded dict; any
    exception (including a failed assert) marks the criterion FAIL.
    """
    info = {"detail": ""}
    t0 = time.perf_counter()
    try:
        yield info
    except BaseException as exc:
        msg = str(exc).strip().splitlines()
        info["detail"] = f"{type(exc).__name__}: {msg[0] if msg else ''}"
        _record(number, False, title, info, t0)
        raise
    _record(number, True, title, info, t0)


def _record(number, passed, title, info, t0):
    line = (f"criterion {number} {'PASS' if passed else 'FAIL'}  {title}"
            f"  [{info['detail']}]  ({time.perf_counter() - t0:.1f} s)")
    ACCEPTANCE[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
