"""Pure numpy bounded dual simplex iterations on a dense tableau.

Fallback for the compiled kernel in ``_simplex_ext``; both expose the same
``dual_simplex`` routine and must follow identical pivoting rules.
"""

import numpy as np

BASIC, AT_LOWER, AT_UPPER, FIXED = 0, 1, 2, 3
OPTIMAL, INFEASIBLE, ITERATION_LIMIT = 0, 1, 2


def dual_simplex(T, beta, d, basic, status, lo, hi, tol_p, tol_d, tol_piv, max_iter, bland_after):
    """Run dual simplex pivots in place until primal feasible.

    ``T`` is the m x N tableau ``B^-1 [A I]``, ``beta`` the basic values,
    ``d`` the reduced costs, ``basic`` the basic column per row and ``status``
    the per-column state. Returns ``(code, iterations)``.
    """
    m = T.shape[0]
    it = 0
    degenerate = 0
    bland = False
    while it < max_iter:
        lb = lo[basic]
        ub = hi[basic]
        below = lb - beta
        above = beta - ub
        infeas = np.maximum(below, above)
        if bland:
            rows = np.flatnonzero(infeas > tol_p)
            if rows.size == 0:
                return OPTIMAL, it
            r = int(rows[np.argmin(basic[rows])])
        else:
            r = int(np.argmax(infeas)) if m else 0
            if m == 0 or infeas[r] <= tol_p:
                return OPTIMAL, it
        to_lower = below[r] > above[r]
        alpha = T[r]
        lower = status == AT_LOWER
        upper = status == AT_UPPER
        if to_lower:
            mask = (lower & (alpha < -tol_piv)) | (upper & (alpha > tol_piv))
        else:
            mask = (lower & (alpha > tol_piv)) | (upper & (alpha < -tol_piv))
        cand = np.flatnonzero(mask)
        if cand.size == 0:
            return INFEASIBLE, it
        a = np.abs(alpha[cand])
        dc = d[cand]
        dj = np.where(lower[cand], np.maximum(dc, 0.0), np.maximum(-dc, 0.0))
        ratios = dj / a
        if bland:
            best = ratios.min()
            q = int(cand[ratios <= best + tol_d / a].min())
        else:
            bound = ((dj + tol_d) / a).min()
            ok = ratios <= bound
            sub = cand[ok]
            q = int(sub[np.argmax(a[ok])])
        aq = T[r, q]
        leaving = basic[r]
        target = lo[leaving] if to_lower else hi[leaving]
        xq = lo[q] if status[q] == AT_LOWER else hi[q]
        delta = (beta[r] - target) / aq
        col = T[:, q].copy()
        beta -= delta * col
        beta[r] = xq + delta
        dq = d[q]
        ratio = dq / aq
        T[r] /= aq
        rows = np.flatnonzero(col)
        rows = rows[rows != r]
        if rows.size:
            T[rows] -= np.outer(col[rows], T[r])
        d -= dq * T[r]
        d[q] = 0.0
        basic[r] = q
        status[q] = BASIC
        if lo[leaving] == hi[leaving]:
            status[leaving] = FIXED
        else:
            status[leaving] = AT_LOWER if to_lower else AT_UPPER
        if abs(ratio) <= tol_d:
            degenerate += 1
            if degenerate > bland_after:
                bland = True
        else:
            degenerate = 0
        it += 1
    return ITERATION_LIMIT, it
