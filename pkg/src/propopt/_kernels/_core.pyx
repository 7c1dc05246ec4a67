# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops.  Signatures and semantics mirror ``_fallback.py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()


cdef void _left(const double[:, ::1] A, const double[:, ::1] W, double[:, ::1] out) noexcept nogil:
    # out = A @ W  (A: N x N, W: N x D), row-major via column-major dgemm on transposes
    cdef int n = A.shape[0], d = W.shape[1]
    cdef double one = 1.0, zero = 0.0
    dgemm("N", "N", &d, &n, &n, &one, <double*>&W[0, 0], &d, <double*>&A[0, 0], &n, &zero, &out[0, 0], &d)


cdef void _right(const double[:, ::1] W, const double[:, ::1] B, double[:, ::1] out) noexcept nogil:
    # out = W @ B  (W: N x D, B: D x D)
    cdef int n = W.shape[0], d = W.shape[1]
    cdef double one = 1.0, zero = 0.0
    dgemm("N", "N", &d, &n, &d, &one, <double*>&B[0, 0], &d, <double*>&W[0, 0], &d, &zero, &out[0, 0], &d)


def pairwise_sq_sum(const double[:, ::1] W, const double[:, ::1] S):
    """Sum over ordered pairs of S[n, m] * |w_n - w_m|^2."""
    cdef Py_ssize_t n, m, d, N = W.shape[0], D = W.shape[1]
    cdef double total = 0.0, acc, diff
    with nogil:
        for n in range(N):
            for m in range(n + 1, N):
                if S[n, m] == 0.0 and S[m, n] == 0.0:
                    continue
                acc = 0.0
                for d in range(D):
                    diff = W[n, d] - W[m, d]
                    acc = acc + diff * diff
                total = total + (S[n, m] + S[m, n]) * acc
    return total


def masked_max_sq(const double[:, ::1] W, const cnp.uint8_t[:, ::1] mask):
    """Largest |w_n - w_m|^2 over masked pairs; returns (value, n, m), n = -1 if empty."""
    cdef Py_ssize_t n, m, d, N = W.shape[0], D = W.shape[1]
    cdef Py_ssize_t bi = -1, bj = -1
    cdef double best = -1.0, acc, diff
    with nogil:
        for n in range(N):
            for m in range(n + 1, N):
                if not (mask[n, m] or mask[m, n]):
                    continue
                acc = 0.0
                for d in range(D):
                    diff = W[n, d] - W[m, d]
                    acc = acc + diff * diff
                if acc > best:
                    best = acc
                    bi = n
                    bj = m
    if bi < 0:
        return 0.0, -1, -1
    return best, bi, bj


cdef double _objective(const double[:, ::1] W, const double[:, ::1] G, const double[:, ::1] LW,
                       const double[:, ::1] WLt, double lf, double lr, double ls,
                       double lc) noexcept nogil:
    cdef Py_ssize_t n, d, N = W.shape[0], D = W.shape[1]
    cdef double fa = 0.0, rb = 0.0, sm = 0.0, cx = 0.0, diff
    for n in range(N):
        for d in range(D):
            diff = W[n, d] - G[n, d]
            fa = fa + diff * diff
            rb = rb + W[n, d] * LW[n, d]
            sm = sm + W[n, d] * WLt[n, d]
            cx = cx + fabs(W[n, d])
    return lf * fa + 2.0 * lr * rb + 2.0 * ls * sm + lc * cx


def quadratic_gd(const double[:, ::1] G, const double[:, ::1] L, const double[:, ::1] Lt,
                 double lf, double lr, double ls, double step, long n_steps,
                 const double[:, ::1] W0):
    """Fixed-step gradient descent on lf|W-G|^2 + 2lr tr(W'LW) + 2ls tr(W Lt W')."""
    cdef Py_ssize_t n, d, N = G.shape[0], D = G.shape[1]
    cdef long k
    W = np.array(W0, dtype=np.float64, order="C", copy=True)
    LW = np.empty((N, D))
    WLt = np.empty((N, D))
    cdef double[:, ::1] w = W, lw = LW, wlt = WLt
    with nogil:
        for k in range(n_steps):
            _left(L, w, lw)
            _right(w, Lt, wlt)
            for n in range(N):
                for d in range(D):
                    w[n, d] = w[n, d] - step * (2.0 * lf * (w[n, d] - G[n, d])
                                                + 4.0 * lr * lw[n, d] + 4.0 * ls * wlt[n, d])
    return W


def fista_l1(const double[:, ::1] G, const double[:, ::1] L, const double[:, ::1] Lt,
             double lf, double lr, double ls, double lc, double lip,
             double tol, long max_iters, const double[:, ::1] W0):
    """Accelerated proximal gradient for the smooth quadratic plus lc*|W|_1.

    Restarts momentum whenever the objective would increase, falling back to a
    plain proximal step from the current iterate.  Returns
    ``(W, iterations, converged, objective, last_step)``.
    """
    cdef Py_ssize_t n, d, N = G.shape[0], D = G.shape[1]
    cdef long k = 0
    cdef double t = 1.0, tn, beta, f_cur, f_new, diff2, wn2, v, thr = lc / lip
    cdef double last = 0.0
    cdef bint converged = False
    W = np.array(W0, dtype=np.float64, order="C", copy=True)
    Y = W.copy()
    Wn = np.empty((N, D))
    LY = np.empty((N, D)); YLt = np.empty((N, D))
    LW = np.empty((N, D)); WLt = np.empty((N, D))
    LWn = np.empty((N, D)); WnLt = np.empty((N, D))
    cdef double[:, ::1] w = W, y = Y, wn = Wn
    cdef double[:, ::1] ly = LY, ylt = YLt, lw = LW, wlt = WLt, lwn = LWn, wnlt = WnLt
    with nogil:
        _left(L, w, lw)
        _right(w, Lt, wlt)
        f_cur = _objective(w, G, lw, wlt, lf, lr, ls, lc)
        for k in range(1, max_iters + 1):
            _left(L, y, ly)
            _right(y, Lt, ylt)
            for n in range(N):
                for d in range(D):
                    v = y[n, d] - (2.0 * lf * (y[n, d] - G[n, d]) + 4.0 * lr * ly[n, d]
                                   + 4.0 * ls * ylt[n, d]) / lip
                    wn[n, d] = v - thr if v > thr else (v + thr if v < -thr else 0.0)
            _left(L, wn, lwn)
            _right(wn, Lt, wnlt)
            f_new = _objective(wn, G, lwn, wnlt, lf, lr, ls, lc)
            if f_new > f_cur:
                # momentum overshoot: plain proximal step from w
                t = 1.0
                for n in range(N):
                    for d in range(D):
                        v = w[n, d] - (2.0 * lf * (w[n, d] - G[n, d]) + 4.0 * lr * lw[n, d]
                                       + 4.0 * ls * wlt[n, d]) / lip
                        wn[n, d] = v - thr if v > thr else (v + thr if v < -thr else 0.0)
                _left(L, wn, lwn)
                _right(wn, Lt, wnlt)
                f_new = _objective(wn, G, lwn, wnlt, lf, lr, ls, lc)
            tn = (1.0 + sqrt(1.0 + 4.0 * t * t)) / 2.0
            beta = (t - 1.0) / tn
            diff2 = 0.0
            wn2 = 0.0
            for n in range(N):
                for d in range(D):
                    v = wn[n, d] - w[n, d]
                    diff2 = diff2 + v * v
                    wn2 = wn2 + wn[n, d] * wn[n, d]
                    y[n, d] = wn[n, d] + beta * v
                    w[n, d] = wn[n, d]
                    lw[n, d] = lwn[n, d]
                    wlt[n, d] = wnlt[n, d]
            t = tn
            f_cur = f_new
            last = sqrt(diff2)
            if last <= tol * (1.0 + sqrt(wn2)):
                converged = True
                break
    return W, k, converged, f_cur, last
