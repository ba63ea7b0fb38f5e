# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled bounded dual simplex iterations on a dense tableau.

Mirrors ``_simplex_py.dual_simplex`` pivot for pivot; the row update skips
zero entries of the pivot row and column.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()

DEF BASIC = 0
DEF AT_LOWER = 1
DEF AT_UPPER = 2
DEF FIXED = 3


def dual_simplex(double[:, ::1] T, double[::1] beta, double[::1] d,
                 cnp.int64_t[::1] basic, cnp.int8_t[::1] status,
                 double[::1] lo, double[::1] hi,
                 double tol_p, double tol_d, double tol_piv,
                 long max_iter, long bland_after):
    cdef Py_ssize_t m = T.shape[0]
    cdef Py_ssize_t n = T.shape[1]
    cdef Py_ssize_t i, j, k, r, q, leaving, nnz_row
    cdef long it = 0, degenerate = 0
    cdef bint bland = False, to_lower, lower_j
    cdef double worst, v, below, above, below_r = 0.0, above_r = 0.0
    cdef double dq, a, dj, ratio, bound, best, best_a, aq, target, xq, delta, f
    cdef cnp.int64_t best_basic
    cdef double[::1] col = np.empty(m)
    cdef cnp.int64_t[::1] nzcols = np.empty(n, dtype=np.int64)
    cdef double[::1] rowr

    while it < max_iter:
        r = -1
        worst = -1.0
        best_basic = -1
        for i in range(m):
            k = basic[i]
            below = lo[k] - beta[i]
            above = beta[i] - hi[k]
            v = below if below > above else above
            if bland:
                if v > tol_p and (best_basic < 0 or k < best_basic):
                    best_basic = k
                    r = i
                    below_r = below
                    above_r = above
            elif v > worst:
                worst = v
                r = i
                below_r = below
                above_r = above
        if bland:
            if r < 0:
                return 0, it
        elif worst <= tol_p:
            return 0, it
        to_lower = below_r > above_r

        # ratio test: Harris two-pass, or smallest index under Bland's rule
        bound = 1e300
        best = 1e300
        for j in range(n):
            if status[j] != AT_LOWER and status[j] != AT_UPPER:
                continue
            v = T[r, j]
            lower_j = status[j] == AT_LOWER
            if to_lower:
                if not ((lower_j and v < -tol_piv) or ((not lower_j) and v > tol_piv)):
                    continue
            else:
                if not ((lower_j and v > tol_piv) or ((not lower_j) and v < -tol_piv)):
                    continue
            a = fabs(v)
            if lower_j:
                dj = d[j] if d[j] > 0.0 else 0.0
            else:
                dj = -d[j] if d[j] < 0.0 else 0.0
            if (dj + tol_d) / a < bound:
                bound = (dj + tol_d) / a
            if dj / a < best:
                best = dj / a
        if bound == 1e300:
            return 1, it
        q = -1
        best_a = -1.0
        for j in range(n):
            if status[j] != AT_LOWER and status[j] != AT_UPPER:
                continue
            v = T[r, j]
            lower_j = status[j] == AT_LOWER
            if to_lower:
                if not ((lower_j and v < -tol_piv) or ((not lower_j) and v > tol_piv)):
                    continue
            else:
                if not ((lower_j and v > tol_piv) or ((not lower_j) and v < -tol_piv)):
                    continue
            a = fabs(v)
            if lower_j:
                dj = d[j] if d[j] > 0.0 else 0.0
            else:
                dj = -d[j] if d[j] < 0.0 else 0.0
            if bland:
                if dj / a <= best + tol_d / a:
                    q = j
                    break
            elif dj / a <= bound and a > best_a:
                best_a = a
                q = j

        aq = T[r, q]
        leaving = basic[r]
        target = lo[leaving] if to_lower else hi[leaving]
        xq = lo[q] if status[q] == AT_LOWER else hi[q]
        delta = (beta[r] - target) / aq
        for i in range(m):
            col[i] = T[i, q]
            beta[i] -= delta * col[i]
        beta[r] = xq + delta
        dq = d[q]
        ratio = dq / aq
        rowr = T[r]
        nnz_row = 0
        for j in range(n):
            if rowr[j] != 0.0:
                rowr[j] /= aq
                nzcols[nnz_row] = j
                nnz_row += 1
        for i in range(m):
            f = col[i]
            if i == r or f == 0.0:
                continue
            for k in range(nnz_row):
                j = nzcols[k]
                T[i, j] -= f * rowr[j]
        for k in range(nnz_row):
            j = nzcols[k]
            d[j] -= dq * rowr[j]
        d[q] = 0.0
        basic[r] = q
        status[q] = BASIC
        if lo[leaving] == hi[leaving]:
            status[leaving] = FIXED
        else:
            status[leaving] = AT_LOWER if to_lower else AT_UPPER
        if fabs(ratio) <= tol_d:
            degenerate += 1
            if degenerate > bland_after:
                bland = True
        else:
            degenerate = 0
        it += 1
    return 2, it
