"""Pure numpy versions of the compiled kernels in ``_ckernels.pyx``."""

import numpy as np


def pivot(T, r, c):
    T[r] /= T[r, c]
    T[r, c] = 1.0
    col = T[:, c].copy()
    col[r] = 0.0
    rows = np.flatnonzero(col)
    if rows.size:
        cols = np.flatnonzero(T[r])
        T[np.ix_(rows, cols)] -= np.outer(col[rows], T[r, cols])
        T[rows, c] = 0.0


def ratio_test(T, c, basis, m, piv_tol, bland, feas_tol=0.0):
    col = T[:m, c]
    cand = np.flatnonzero(col > piv_tol)
    if cand.size == 0:
        return -1
    rhs = np.maximum(T[cand, -1], 0.0)
    ratios = rhs / col[cand]
    rmin = ((rhs + feas_tol) / col[cand]).min()
    tied = cand[ratios <= rmin + 1e-12 * (1.0 + rmin)]
    if bland:
        return int(tied[np.argmin(basis[tied])])
    return int(tied[np.argmax(col[tied])])


def bellman_backup(P, C, v, lam):
    Q = C + lam * (P @ v)
    rule = Q.argmin(axis=1)
    return Q[np.arange(Q.shape[0]), rule], rule.astype(np.int64)
