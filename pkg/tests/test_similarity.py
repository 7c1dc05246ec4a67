import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from propopt.errors import ConvexityError, ValidationError
from propopt.functions import PointSet
from propopt.losses import loss_robust_pairwise, loss_smooth
from propopt.similarity import (SimilarityBundle, SimilaritySpec, build_dimension_similarity,
                                build_joint_precision, build_laplacian, build_similarity, kernel_eval,
                                load_matrix_csv, make_bundle)


def _pts(rows):
    X = np.asarray(rows, dtype=float)
    return PointSet(X, [(X.min() - 1, X.max() + 1)] * X.shape[1])


def test_kernel_eval_examples():
    x = np.array([0.3, -0.2])
    assert kernel_eval("gaussian", x, x, 0.7) == 1.0
    # threshold boundary is inclusive
    assert kernel_eval("threshold", np.zeros(1), np.array([1.0]), 1.0) == 1.0
    L = 1.3
    xp = np.array([np.sqrt(2) * L, 0.0])
    assert kernel_eval("gaussian", np.zeros(2), xp, L) == pytest.approx(np.exp(-1), rel=1e-12)
    with pytest.raises(ValidationError):
        kernel_eval("gaussian", np.array([np.nan]), np.zeros(1), 1.0)


def test_build_similarity_examples():
    P = _pts([[0.0], [1.0]])
    assert build_similarity(P, SimilaritySpec("threshold", 1.0))[0, 1] == 1.0
    assert build_similarity(P, SimilaritySpec("threshold", 0.5))[0, 1] == 0.0
    assert build_similarity(P, SimilaritySpec("gaussian", 1.0))[0, 1] == pytest.approx(0.606530659713, abs=1e-12)
    assert np.all(np.diag(build_similarity(P, SimilaritySpec("gaussian", 1.0))) == 0)


def test_precision_similarity_is_negated_inverse():
    P = _pts(np.random.default_rng(0).uniform(-1, 1, size=(4, 2)))
    spec = SimilaritySpec("precision", 1.0, ridge=1e-3)
    S = build_similarity(P, spec)
    from propopt.similarity import kernel_matrix
    K = kernel_matrix(P, "gaussian", 1.0) + 1e-3 * np.eye(4)
    ref = -np.linalg.inv(K)
    np.fill_diagonal(ref, 0.0)
    np.testing.assert_allclose(S, ref, rtol=1e-9, atol=1e-9)


def test_precision_singular_kernel_names_ridge():
    P = _pts([[0.0], [0.0], [1.0]])
    with pytest.raises(ConvexityError, match="ridge"):
        build_similarity(P, SimilaritySpec("precision", 1.0, ridge=0.0))


def test_custom_similarity_validated():
    M = np.array([[0.0, 2.0], [2.0, 0.0]])
    np.testing.assert_array_equal(build_similarity(_pts([[0.0], [1.0]]), SimilaritySpec("custom", matrix=M)), M)
    with pytest.raises(ValidationError):
        SimilaritySpec("custom", matrix=np.array([[0.0, 1.0], [2.0, 0.0]]))
    with pytest.raises(ValidationError):
        build_similarity(_pts([[0.0], [1.0], [2.0]]), SimilaritySpec("custom", matrix=M))
    with pytest.raises(ValidationError):
        SimilaritySpec("gaussian", scale=0.0)


def test_laplacian_examples():
    np.testing.assert_array_equal(build_laplacian(np.array([[0.0, 1.0], [1.0, 0.0]])), [[1, -1], [-1, 1]])
    chain = np.array([[0.0, 1, 0], [1, 0, 1], [0, 1, 0]])
    np.testing.assert_array_equal(build_laplacian(chain), [[1, -1, 0], [-1, 2, -1], [0, -1, 1]])
    with pytest.raises(ValidationError):
        build_laplacian(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_dimension_similarity_examples():
    np.testing.assert_array_equal(build_dimension_similarity(3, "chain"), [[0, 1, 0], [1, 0, 1], [0, 1, 0]])
    grid = build_dimension_similarity(4, "image-grid", h=2, w=2)
    np.testing.assert_array_equal(grid.sum(axis=1), [2, 2, 2, 2])
    img = build_dimension_similarity(12, "image-grid", h=3, w=4)
    assert img[0, 1] == 1 and img[0, 4] == 1 and img[3, 4] == 0
    with pytest.raises(ValidationError):
        build_dimension_similarity(5, "image-grid", h=2, w=2)
    with pytest.raises(ValidationError):
        build_dimension_similarity(2, "custom", matrix=np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_joint_precision_two_points():
    b = SimilarityBundle(np.array([[0.0, 1.0], [1.0, 0.0]]), np.zeros((1, 1)))
    np.testing.assert_array_equal(build_joint_precision(b, 1.0, 0.0), [[2, -2], [-2, 2]])


def test_joint_precision_matches_losses():
    rng = np.random.default_rng(3)
    P = _pts(rng.uniform(-1, 1, size=(6, 3)))
    b = make_bundle(P, SimilaritySpec("gaussian", 0.8))
    lr, ls = 0.7, 1.9
    Q = build_joint_precision(b, lr, ls)
    W = rng.normal(size=(6, 3))
    e = W.ravel()
    ref = lr * loss_robust_pairwise(W, b.S) + ls * loss_smooth(W, b.S_tilde)
    assert e @ Q @ e == pytest.approx(ref, rel=1e-10)
    np.testing.assert_allclose(Q @ np.ones(18), 0.0, atol=1e-12)
    np.testing.assert_array_equal(Q, Q.T)
    assert np.linalg.eigvalsh(Q)[0] > -1e-10


def test_bundle_is_read_only_and_validated():
    b = make_bundle(_pts([[0.0], [1.0], [3.0]]), SimilaritySpec("gaussian", 1.0))
    with pytest.raises(ValueError):
        b.L[0, 0] = 5.0
    # the diagonal never enters a loss, so it is zeroed rather than rejected
    diag = SimilarityBundle(np.array([[1.0, 1.0], [1.0, 0.0]]), np.zeros((1, 1)))
    np.testing.assert_array_equal(diag.S, [[0, 1], [1, 0]])
    with pytest.raises(ValidationError):
        SimilarityBundle(np.array([[0.0, 1.0], [0.5, 0.0]]), np.zeros((1, 1)))


def test_neighbor_mask():
    b = make_bundle(_pts([[0.0], [1.0], [5.0]]), SimilaritySpec("threshold", 1.0))
    np.testing.assert_array_equal(b.neighbor_mask(), [[0, 1, 0], [1, 0, 0], [0, 0, 0]])
    far = make_bundle(_pts([[0.0], [5.0]]), SimilaritySpec("threshold", 1.0))
    np.testing.assert_array_equal(far.neighbor_mask(), [[0, 1], [1, 0]])


def test_matrix_csv(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("0,1\n1,0\n")
    np.testing.assert_array_equal(load_matrix_csv(p), [[0, 1], [1, 0]])
    p.write_text("0,1\n2,0\n")
    with pytest.raises(ValidationError):
        load_matrix_csv(p)


@settings(max_examples=40, deadline=None)
@given(arrays(float, (5, 2), elements=st.floats(-3, 3)), st.floats(0.1, 3.0), st.sampled_from(["gaussian", "threshold"]))
def test_bundle_invariants(X, scale, kind):
    P = PointSet(X, [(-3, 3)] * 2)
    b = make_bundle(P, SimilaritySpec(kind, scale))
    np.testing.assert_array_equal(b.S, b.S.T)
    assert np.all(np.diag(b.S) == 0)
    np.testing.assert_allclose(b.L @ np.ones(5), 0.0, atol=1e-12)
    np.testing.assert_allclose(b.L_tilde @ np.ones(2), 0.0, atol=1e-12)
    np.linalg.cholesky(b.L + 1e-10 * np.eye(5))
    vals = b.S[~np.eye(5, dtype=bool)]
    if kind == "gaussian":
        d2 = np.sum((X[:, None] - X[None]) ** 2, axis=-1)[~np.eye(5, dtype=bool)]
        assert np.all(vals <= 1) and np.all(vals[d2 / (2 * scale**2) < 700] > 0)
    else:
        assert set(np.unique(vals)) <= {0.0, 1.0}


@settings(max_examples=40, deadline=None)
@given(arrays(float, (6, 3), elements=st.floats(-5, 5)), arrays(float, (6, 6), elements=st.floats(0, 2)))
def test_pairwise_loss_equals_laplacian_trace(W, A):
    S = A + A.T
    np.fill_diagonal(S, 0.0)
    L = build_laplacian(S)
    ref = 2.0 * np.trace(W.T @ L @ W)
    assert loss_robust_pairwise(W, S) == pytest.approx(ref, rel=1e-10, abs=1e-10)
