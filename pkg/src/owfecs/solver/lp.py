"""Bounded-variable dual simplex for the LP relaxations.

Every row gets a slack, so the problem is ``[A I] z = b`` with bounds on all
of ``z``. Structural columns start nonbasic at the bound their cost prefers,
which makes the all-slack basis dual feasible; dual simplex iterations then
restore primal feasibility. Infinite structural bounds are replaced by an
artificial box; an optimum resting on that box with a nonzero reduced cost
means the LP is unbounded.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._simplex_py import AT_LOWER, AT_UPPER, BASIC, FIXED, INFEASIBLE, ITERATION_LIMIT, OPTIMAL
from .kernel import get_kernel

OPTIMAL_S = "Optimal"
INFEASIBLE_S = "Infeasible"
UNBOUNDED_S = "Unbounded"
ITERATION_LIMIT_S = "IterationLimit"

BOX = 1e7
TOL_P = 1e-9
TOL_D = 1e-9
TOL_PIV = 1e-9
FEAS_TOL = 1e-7
BLAND_AFTER = 1000


class NumericalInstabilityError(RuntimeError):
    pass


@dataclass
class LinearProgram:
    """``min c x + constant`` s.t. ``A x (<=,=,>=) b`` (sense -1/0/+1), ``lower <= x <= upper``."""

    c: np.ndarray
    A: np.ndarray
    sense: np.ndarray
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    constant: float = 0.0
    _abar: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float)).reshape(-1, self.c.size)
        self.sense = np.asarray(self.sense, dtype=np.int8)
        self.b = np.asarray(self.b, dtype=float)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)

    @classmethod
    def from_model(cls, model) -> "LinearProgram":
        c, A, sense, b, lo, hi = model.to_arrays()
        return cls(c, A, sense, b, lo, hi, model.constant)

    @classmethod
    def from_rows(cls, c, rows: Sequence[tuple[Sequence[float], str, float]], bounds) -> "LinearProgram":
        """Small helper: ``rows`` of (coefficients, '<='|'='|'>=', rhs), ``bounds`` of (lo, hi)."""
        code = {"<=": -1, "=": 0, ">=": 1}
        c = np.asarray(c, dtype=float)
        A = np.array([r[0] for r in rows], dtype=float).reshape(len(rows), c.size)
        lo = np.array([-np.inf if b[0] is None else b[0] for b in bounds], dtype=float)
        hi = np.array([np.inf if b[1] is None else b[1] for b in bounds], dtype=float)
        return cls(c, A, [code[r[1]] for r in rows], [r[2] for r in rows], lo, hi)

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape

    @property
    def abar(self) -> np.ndarray:
        if self._abar is None:
            m = self.A.shape[0]
            self._abar = np.ascontiguousarray(np.hstack([self.A, np.eye(m)]))
        return self._abar


@dataclass
class LpState:
    """Final simplex state, reusable as a warm start after bound changes."""

    T: np.ndarray
    beta: np.ndarray
    d: np.ndarray
    basic: np.ndarray
    status: np.ndarray
    xval: np.ndarray  # values used for nonbasic columns

    def basis(self) -> tuple[np.ndarray, np.ndarray]:
        return self.basic.copy(), self.status.copy()


@dataclass
class LpSolution:
    status: str
    objective: float
    values: np.ndarray
    iterations: int = 0
    state: LpState | None = None

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL_S


def _full_bounds(lp: LinearProgram, lower, upper):
    n = lp.c.size
    m = lp.b.size
    lo = np.empty(n + m)
    hi = np.empty(n + m)
    lo[:n] = lp.lower if lower is None else lower
    hi[:n] = lp.upper if upper is None else upper
    boxed = np.zeros(n + m, dtype=bool)
    inf_lo = ~np.isfinite(lo[:n])
    inf_hi = ~np.isfinite(hi[:n])
    boxed[:n] = inf_lo | inf_hi
    lo[:n][inf_lo] = -BOX
    hi[:n][inf_hi] = BOX
    s = lp.sense
    lo[n:] = np.where(s == 1, -np.inf, 0.0)
    hi[n:] = np.where(s == -1, np.inf, 0.0)
    return lo, hi, boxed


def _nonbasic_values(status, lo, hi):
    x = np.where(status == AT_UPPER, hi, lo)
    x[status == BASIC] = 0.0
    return x


def _normalize_status(status, d, lo, hi, tol):
    """Fix nonbasic states for the current bounds; False if dual feasibility is lost."""
    nb = status != BASIC
    fixed = nb & (lo == hi)
    status[fixed] = FIXED
    free_lo = np.isfinite(lo)
    free_hi = np.isfinite(hi)
    was_fixed = nb & ~fixed & (status == FIXED)
    status[was_fixed & (d >= 0) & free_lo] = AT_LOWER
    status[was_fixed & (d < 0) & free_hi] = AT_UPPER
    to_up = (status == AT_LOWER) & (d < -tol)
    to_lo = (status == AT_UPPER) & (d > tol)
    if np.any(to_up & ~free_hi) or np.any(to_lo & ~free_lo):
        return False
    status[to_up] = AT_UPPER
    status[to_lo] = AT_LOWER
    bad = (status == AT_LOWER) & ~free_lo | (status == AT_UPPER) & ~free_hi | (status == FIXED) & ~(lo == hi)
    return not np.any(bad & nb)


def _cold_start(lp: LinearProgram, cs, lo, hi):
    n = lp.c.size
    m = lp.b.size
    T = lp.abar.copy()
    basic = np.arange(n, n + m, dtype=np.int64)
    status = np.zeros(n + m, dtype=np.int8)
    status[:n] = np.where(cs[:n] >= 0, AT_LOWER, AT_UPPER)
    status[:n][lo[:n] == hi[:n]] = FIXED
    x = _nonbasic_values(status, lo, hi)
    beta = lp.b - lp.A @ x[:n]
    d = cs.copy()
    return T, beta, d, basic, status


def _factor(lp: LinearProgram, cs, lo, hi, basic, status, full=True):
    """Tableau, basic values and reduced costs for a given basis."""
    abar = lp.abar
    B = abar[:, basic]
    x = _nonbasic_values(status, lo, hi)
    rhs = lp.b - abar @ x
    if full:
        T = np.ascontiguousarray(np.linalg.solve(B, abar))
    else:
        T = None
    beta = np.linalg.solve(B, rhs)
    y = np.linalg.solve(B.T, cs[basic])
    d = cs - abar.T @ y
    d[basic] = 0.0
    return T, beta, d


def solve_lp(
    lp: LinearProgram,
    lower=None,
    upper=None,
    start: LpState | tuple | None = None,
    kernel: str | None = None,
    max_iter: int | None = None,
    keep_state: bool = True,
) -> LpSolution:
    """Solve the LP (optionally with replaced column bounds).

    ``start`` may be an ``LpState`` from a previous solve of the same LP (its
    tableau is consumed) or a ``(basic, status)`` basis to refactorize.
    """
    run = get_kernel(kernel)
    n = lp.c.size
    m = lp.b.size
    lo, hi, boxed = _full_bounds(lp, lower, upper)
    if np.any(lo > hi):
        return LpSolution(INFEASIBLE_S, np.inf, np.full(n, np.nan))
    scale = max(1.0, float(np.max(np.abs(lp.c), initial=0.0)))
    cs = np.zeros(n + m)
    cs[:n] = lp.c / scale
    max_iter = max_iter or 50 * (n + m) + 1000

    T = None
    if isinstance(start, LpState):
        T, beta, d, basic, status = start.T, start.beta.copy(), start.d.copy(), start.basic.copy(), start.status.copy()
        ok = _normalize_status(status, d, lo, hi, TOL_D)
        if ok:
            x_new = _nonbasic_values(status, lo, hi)
            delta = x_new - start.xval
            delta[status == BASIC] = 0.0
            moved = np.flatnonzero(delta)
            if moved.size:
                beta -= T[:, moved] @ delta[moved]
        else:
            T = None
    elif start is not None:
        basic = np.asarray(start[0], dtype=np.int64).copy()
        status = np.asarray(start[1], dtype=np.int8).copy()
        try:
            T, beta, d = _factor(lp, cs, lo, hi, basic, status)
        except np.linalg.LinAlgError:
            T = None
        if T is not None and not _normalize_status(status, d, lo, hi, TOL_D):
            T = None
        elif T is not None:
            beta = _factor(lp, cs, lo, hi, basic, status, full=False)[1]
    if T is None:
        T, beta, d, basic, status = _cold_start(lp, cs, lo, hi)

    total = 0
    for attempt in range(4):
        code, it = run(T, beta, d, basic, status, lo, hi, TOL_P, TOL_D, TOL_PIV, max_iter, BLAND_AFTER)
        total += it
        if code == ITERATION_LIMIT:
            return LpSolution(ITERATION_LIMIT_S, np.nan, np.full(n, np.nan), total)
        # refactorize: fresh basic values and reduced costs
        try:
            _, beta_f, d_f = _factor(lp, cs, lo, hi, basic, status, full=False)
        except np.linalg.LinAlgError:
            raise NumericalInstabilityError("singular basis") from None
        if code == INFEASIBLE:
            if attempt == 0:
                T, beta, d = _factor(lp, cs, lo, hi, basic, status)
                if _normalize_status(status, d, lo, hi, TOL_D):
                    beta = _factor(lp, cs, lo, hi, basic, status, full=False)[1]
                    continue
                T, beta, d, basic, status = _cold_start(lp, cs, lo, hi)
                continue
            return LpSolution(INFEASIBLE_S, np.inf, np.full(n, np.nan), total)
        lb_b, ub_b = lo[basic], hi[basic]
        viol = float(np.max(np.maximum(lb_b - beta_f, beta_f - ub_b), initial=0.0))
        before = status.copy()
        dual_ok = _normalize_status(status, d_f, lo, hi, 1e-7)
        flipped = not np.array_equal(before, status)
        if viol <= FEAS_TOL and dual_ok and not flipped:
            beta, d = beta_f, d_f
            break
        if attempt == 3:
            raise NumericalInstabilityError(f"residual {viol:.3g} after refinement")
        if not dual_ok:
            T, beta, d, basic, status = _cold_start(lp, cs, lo, hi)
        else:
            T, beta, d = _factor(lp, cs, lo, hi, basic, status)
    xall = _nonbasic_values(status, lo, hi)
    xall[basic] = beta
    x = xall[:n].copy()
    nb = status[:n] != BASIC
    at_box = boxed[:n] & ((np.abs(x - BOX) <= 1e-6 * BOX) | (np.abs(x + BOX) <= 1e-6 * BOX))
    if np.any(at_box & (~nb | (np.abs(d[:n]) > TOL_D))):
        return LpSolution(UNBOUNDED_S, -np.inf, x, total)
    obj = float(lp.c @ x) + lp.constant
    state = None
    if keep_state:
        xval = _nonbasic_values(status, lo, hi)
        state = LpState(T, beta, d, basic, status, xval)
    return LpSolution(OPTIMAL_S, obj, x, total, state)
