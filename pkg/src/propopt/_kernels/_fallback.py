"""Pure-numpy versions of the compiled kernels (same signatures, same results
up to floating-point reassociation)."""

import numpy as np

_CHUNK = 256


def pairwise_sq_sum(W, S):
    total = 0.0
    N = W.shape[0]
    for start in range(0, N, _CHUNK):
        block = W[start:start + _CHUNK]
        diff = block[:, None, :] - W[None, :, :]
        total += float(np.sum(S[start:start + _CHUNK] * np.einsum("ijk,ijk->ij", diff, diff)))
    return total


def masked_max_sq(W, mask):
    best, bi, bj = -1.0, -1, -1
    N = W.shape[0]
    sym = np.triu(np.logical_or(mask, mask.T), k=1)
    for start in range(0, N, _CHUNK):
        rows = sym[start:start + _CHUNK]
        if not rows.any():
            continue
        diff = W[start:start + _CHUNK, None, :] - W[None, :, :]
        sq = np.where(rows, np.einsum("ijk,ijk->ij", diff, diff), -1.0)
        k = int(np.argmax(sq))
        i, j = divmod(k, N)
        if sq[i, j] > best:
            best, bi, bj = float(sq[i, j]), start + i, j
    if bi < 0:
        return 0.0, -1, -1
    return best, bi, bj


def _objective(W, G, LW, WLt, lf, lr, ls, lc):
    return (lf * float(np.sum((W - G) ** 2)) + 2.0 * lr * float(np.sum(W * LW))
            + 2.0 * ls * float(np.sum(W * WLt)) + lc * float(np.sum(np.abs(W))))


def quadratic_gd(G, L, Lt, lf, lr, ls, step, n_steps, W0):
    W = np.array(W0, dtype=float, copy=True)
    for _ in range(int(n_steps)):
        W -= step * (2.0 * lf * (W - G) + 4.0 * lr * (L @ W) + 4.0 * ls * (W @ Lt))
    return W


def _soft(V, thr):
    return np.sign(V) * np.maximum(np.abs(V) - thr, 0.0)


def fista_l1(G, L, Lt, lf, lr, ls, lc, lip, tol, max_iters, W0):
    thr = lc / lip
    W = np.array(W0, dtype=float, copy=True)
    Y = W.copy()
    LW, WLt = L @ W, W @ Lt
    f_cur = _objective(W, G, LW, WLt, lf, lr, ls, lc)
    t = 1.0
    last = 0.0
    k = 0
    converged = False
    for k in range(1, int(max_iters) + 1):
        grad = 2.0 * lf * (Y - G) + 4.0 * lr * (L @ Y) + 4.0 * ls * (Y @ Lt)
        Wn = _soft(Y - grad / lip, thr)
        LWn, WnLt = L @ Wn, Wn @ Lt
        f_new = _objective(Wn, G, LWn, WnLt, lf, lr, ls, lc)
        if f_new > f_cur:
            t = 1.0
            grad = 2.0 * lf * (W - G) + 4.0 * lr * LW + 4.0 * ls * WLt
            Wn = _soft(W - grad / lip, thr)
            LWn, WnLt = L @ Wn, Wn @ Lt
            f_new = _objective(Wn, G, LWn, WnLt, lf, lr, ls, lc)
        tn = (1.0 + np.sqrt(1.0 + 4.0 * t * t)) / 2.0
        step = Wn - W
        Y = Wn + ((t - 1.0) / tn) * step
        W, LW, WLt = Wn, LWn, WnLt
        t, f_cur = tn, f_new
        last = float(np.sqrt(np.sum(step**2)))
        if last <= tol * (1.0 + float(np.sqrt(np.sum(Wn**2)))):
            converged = True
            break
    return W, k, converged, f_cur, last
