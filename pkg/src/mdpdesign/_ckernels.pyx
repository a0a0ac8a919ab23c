# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for the tableau simplex and value iteration.

Semantics must stay identical to ``_pykernels``; both are exercised by
``tests/test_kernels.py``.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef Py_ssize_t BLAS_STATES = 32  # rows at least this long go through BLAS


def pivot(double[:, ::1] T, Py_ssize_t r, Py_ssize_t c):
    """Gauss-Jordan pivot of ``T`` on entry ``(r, c)``, in place."""
    cdef Py_ssize_t nr = T.shape[0]
    cdef Py_ssize_t nc = T.shape[1]
    cdef Py_ssize_t i, j, k, nnz = 0
    cdef double p = T[r, c]
    cdef double f
    cdef cnp.intp_t[::1] nzbuf = np.empty(nc, dtype=np.intp)

    for j in range(nc):
        if T[r, j] != 0.0:
            T[r, j] = T[r, j] / p
            nzbuf[nnz] = j
            nnz += 1
    T[r, c] = 1.0

    for i in range(nr):
        if i == r:
            continue
        f = T[i, c]
        if f == 0.0:
            continue
        for k in range(nnz):
            j = nzbuf[k]
            T[i, j] = T[i, j] - f * T[r, j]
        T[i, c] = 0.0


def ratio_test(const double[:, ::1] T, Py_ssize_t c, const cnp.int64_t[::1] basis,
               Py_ssize_t m, double piv_tol, bint bland, double feas_tol=0.0):
    """Leaving row for entering column ``c``, or -1 if the column is unbounded.

    Two passes in the style of Harris: the first bounds the step with every
    right-hand side relaxed by ``feas_tol``, the second picks among rows whose
    exact ratio is within that bound (plus 1e-12 relative). Ties go to the
    lowest basic variable index under Bland's rule and to the largest pivot
    otherwise. ``feas_tol=0`` gives the textbook minimum-ratio rule.
    """
    cdef Py_ssize_t rhs = T.shape[1] - 1
    cdef Py_ssize_t i, best = -1
    cdef double a, b, ratio, rmin = 1e300, cut, best_a = 0.0
    cdef cnp.int64_t best_var = 0

    for i in range(m):
        a = T[i, c]
        if a > piv_tol:
            b = T[i, rhs]
            if b < 0.0:
                b = 0.0
            ratio = (b + feas_tol) / a
            if ratio < rmin:
                rmin = ratio
    if rmin == 1e300:
        return -1

    cut = rmin + 1e-12 * (1.0 + rmin)
    for i in range(m):
        a = T[i, c]
        if a > piv_tol:
            b = T[i, rhs]
            if b < 0.0:
                b = 0.0
            if b / a <= cut:
                if best < 0:
                    best = i
                    best_a = a
                    best_var = basis[i]
                elif bland:
                    if basis[i] < best_var:
                        best = i
                        best_a = a
                        best_var = basis[i]
                elif a > best_a:
                    best = i
                    best_a = a
                    best_var = basis[i]
    return best


def bellman_backup(const double[:, :, ::1] P, const double[:, ::1] C, const double[::1] v, double lam):
    """One min-cost Bellman backup; returns (new values, greedy rule)."""
    cdef Py_ssize_t S = P.shape[0]
    cdef Py_ssize_t A = P.shape[1]
    cdef Py_ssize_t s, a, j
    cdef double q, acc, a0, a1, a2, a3, qbest
    cdef Py_ssize_t abest
    cdef Py_ssize_t S4 = S - S % 4
    cdef const double *row
    out = np.empty(S, dtype=np.float64)
    rule = np.empty(S, dtype=np.int64)
    cdef double[::1] out_v = out
    cdef cnp.int64_t[::1] rule_v = rule

    cdef double[:, ::1] PV
    if S >= BLAS_STATES:
        # large rows: the matrix-vector product is faster through BLAS
        PV = np.dot(np.asarray(P).reshape(S * A, S), np.asarray(v)).reshape(S, A)
        for s in range(S):
            abest = 0
            qbest = C[s, 0] + lam * PV[s, 0]
            for a in range(1, A):
                q = C[s, a] + lam * PV[s, a]
                if q < qbest:
                    qbest = q
                    abest = a
            out_v[s] = qbest
            rule_v[s] = abest
        return out, rule

    for s in range(S):
        qbest = 0.0
        abest = -1
        for a in range(A):
            # four partial sums keep the multiply-adds independent
            row = &P[s, a, 0]
            a0 = a1 = a2 = a3 = 0.0
            for j in range(0, S4, 4):
                a0 += row[j] * v[j]
                a1 += row[j + 1] * v[j + 1]
                a2 += row[j + 2] * v[j + 2]
                a3 += row[j + 3] * v[j + 3]
            acc = (a0 + a1) + (a2 + a3)
            for j in range(S4, S):
                acc += row[j] * v[j]
            q = C[s, a] + lam * acc
            if abest < 0 or q < qbest:
                qbest = q
                abest = a
        out_v[s] = qbest
        rule_v[s] = abest
    return out, rule
