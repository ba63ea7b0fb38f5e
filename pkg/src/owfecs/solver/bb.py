"""Best-first branch and bound over the LP relaxation.

Children inherit their parent's tableau, so a node usually needs only a few
dual simplex pivots after its bound change. Tableaux live in a small LRU
cache; a node whose parent tableau was evicted refactorizes from the stored
basis instead.
"""

from __future__ import annotations

import heapq
import json
import logging
import math
import time
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from ..evaluation import RADIAL, RING, Plan, PlanError
from ..farm import CandidateSet
from ..model import MilpModel
from .lp import LinearProgram, solve_lp

log = logging.getLogger(__name__)

OPTIMAL = "Optimal"
FEASIBLE_WITHIN_GAP = "FeasibleWithinGap"
INFEASIBLE = "Infeasible"
TIME_LIMIT = "TimeLimit"

INT_TOL = 1e-6


@dataclass(frozen=True)
class SolveLimits:
    time_limit_s: float = 600.0
    gap_target: float = 0.0
    node_limit: int | None = None
    deterministic: bool = True
    cache_size: int = 16

    def __post_init__(self):
        if self.gap_target < 0:
            raise ValueError("gap_target must be nonnegative")
        if self.time_limit_s <= 0:
            raise ValueError("time_limit_s must be positive")


def relative_gap(upper: float, lower: float) -> float:
    if not math.isfinite(upper):
        return math.inf
    return max(0.0, (upper - lower) / max(abs(upper), 1e-9))


@dataclass
class MilpSolution:
    status: str
    values: np.ndarray | None
    upper_bound: float
    lower_bound: float
    nodes_explored: int
    wall_time: float
    root_bound: float = math.nan
    lp_iterations: int = 0
    events: list[dict] = field(default_factory=list)
    model: MilpModel | None = field(default=None, repr=False)

    @property
    def objective(self) -> float:
        return self.upper_bound

    @property
    def gap(self) -> float:
        return relative_gap(self.upper_bound, self.lower_bound)

    @property
    def has_incumbent(self) -> bool:
        return self.values is not None

    def summary(self) -> dict:
        def num(v):
            return v if math.isfinite(v) else None

        return {
            "status": self.status,
            "objective": num(self.upper_bound),
            "upper_bound": num(self.upper_bound),
            "lower_bound": num(self.lower_bound),
            "gap": num(self.gap),
            "root_bound": num(self.root_bound),
            "nodes_explored": self.nodes_explored,
            "lp_iterations": self.lp_iterations,
            "wall_time": self.wall_time,
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2)


def _branch_column(x, int_cols, priority):
    frac = np.abs(x[int_cols] - np.round(x[int_cols]))
    live = frac > INT_TOL
    if not live.any():
        return None
    pr = priority[live]
    top = pr == pr.min()
    cols = int_cols[live][top]
    score = np.minimum(frac[live][top], 1.0 - frac[live][top])
    return int(cols[np.argmax(score)])  # first max: lowest column wins ties


def solve_bb(
    model: MilpModel,
    limits: SolveLimits = SolveLimits(),
    incumbent=None,
    kernel: str | None = None,
) -> MilpSolution:
    """Minimize ``model`` exactly (``gap_target=0``) or to a relative gap.

    ``incumbent`` may be a full column vector (for instance from
    ``ring_solution_values``) used as the starting upper bound.
    """
    t0 = time.perf_counter()
    lp = LinearProgram.from_model(model)
    mask = model.binary_mask
    int_cols = np.flatnonzero(mask)
    priority = np.array([0 if v.priority is None else v.priority for v in model.variables])[int_cols]
    lo0, hi0 = lp.lower.copy(), lp.upper.copy()

    best_x = None
    ub = math.inf
    events: list[dict] = []
    if incumbent is not None:
        v = np.asarray(incumbent, dtype=float)
        integral = np.all(np.abs(v[int_cols] - np.round(v[int_cols])) <= INT_TOL)
        if integral and model.max_violation(v) <= 1e-6:
            best_x, ub = v.copy(), model.objective_value(v)
        else:
            log.warning("initial incumbent rejected (infeasible or fractional)")

    def tol(u):
        return max(1e-9, 1e-9 * abs(u))

    def done(status, lb, nodes, iters, root):
        lb = min(lb, ub) if best_x is not None else lb
        sol = MilpSolution(status, best_x, ub, lb, nodes, time.perf_counter() - t0, root, iters, events, model)
        log.info("summary %s", json.dumps(sol.summary()))
        return sol

    root = solve_lp(lp, kernel=kernel)
    iters = root.iterations
    if not root.optimal:
        status = INFEASIBLE if best_x is None else OPTIMAL
        return done(status, ub if best_x is not None else math.inf, 1, iters, math.inf)
    root_bound = root.objective

    # heap entries: (bound, -depth, creation, fixes, parent key, basis)
    cache: OrderedDict[int, list] = OrderedDict()
    heap: list = []
    counter = 0
    nodes = 0
    lb = root_bound

    def record(kind):
        events.append({"event": kind, "nodes": nodes, "lb": min(lb, ub), "ub": ub, "gap": relative_gap(ub, lb)})

    def process(sol, fixes, depth):
        nonlocal best_x, ub, counter
        if sol.objective >= ub - tol(ub):
            return
        j = _branch_column(sol.values, int_cols, priority)
        if j is None:
            best_x, ub = sol.values.copy(), sol.objective
            record("incumbent")
            log.info("nodes=%d lb=%.10g ub=%.10g gap=%.4f%%", nodes, min(lb, ub), ub, 100 * relative_gap(ub, lb))
            return
        key = counter
        cache[key] = [sol.state, 2]
        while len(cache) > limits.cache_size:
            cache.popitem(last=False)
        basis = sol.state.basis()
        xj = sol.values[j]
        for side, bounds in ((0, (lo0[j], math.floor(xj))), (1, (math.ceil(xj), hi0[j]))):
            counter += 1
            child = dict(fixes)
            child[j] = bounds
            heapq.heappush(heap, (sol.objective, -(depth + 1), counter, child, key, basis))

    process(root, {}, 0)
    nodes = 1
    status = OPTIMAL
    while heap:
        lb = max(lb, heap[0][0])
        if best_x is not None and (ub - lb <= tol(ub) or relative_gap(ub, lb) <= limits.gap_target):
            break
        if time.perf_counter() - t0 > limits.time_limit_s:
            status = TIME_LIMIT
            break
        if limits.node_limit is not None and nodes >= limits.node_limit:
            status = FEASIBLE_WITHIN_GAP if best_x is not None else TIME_LIMIT
            break
        bound, neg_depth, _, fixes, key, basis = heapq.heappop(heap)
        if bound >= ub - tol(ub):
            continue
        lo, hi = lo0.copy(), hi0.copy()
        for j, (a, b) in fixes.items():
            lo[j], hi[j] = a, b
        entry = cache.get(key)
        if entry is not None:
            entry[1] -= 1
            if entry[1] <= 0:
                del cache[key]
                start = entry[0]
            else:
                st = entry[0]
                start = type(st)(st.T.copy(), st.beta, st.d, st.basic, st.status, st.xval)
        else:
            start = basis
        sol = solve_lp(lp, lo, hi, start=start, kernel=kernel)
        nodes += 1
        iters += sol.iterations
        if sol.optimal:
            process(sol, fixes, -neg_depth)
    else:
        lb = ub if best_x is not None else math.inf
    if best_x is None and status == OPTIMAL:
        status = INFEASIBLE
    if heap and status == OPTIMAL:
        lb = max(lb, heap[0][0])
    return done(status, lb, nodes, iters, root_bound)


def _rounded(values, model: MilpModel, prefix: str, cid) -> int:
    v = values[model.var_index[f"{prefix}[{cid[0]},{cid[1]}]"]]
    r = round(v)
    if abs(v - r) > INT_TOL:
        raise PlanError(f"{prefix}{cid} = {v} is not integral")
    return int(r)


def extract_plan(sol: MilpSolution, candidates: CandidateSet) -> Plan:
    """Read the invested cables (and ring routes) out of a MILP solution."""
    if sol.values is None or sol.model is None:
        raise PlanError(f"no incumbent to extract (status {sol.status})")
    model = sol.model
    x = sol.values
    chosen = [c for c in candidates.cables if _rounded(x, model, "x", c.id) == 1]
    topology = model.meta.get("topology", RING)
    if topology == RADIAL:
        return Plan.from_ids(RADIAL, [c.id for c in chosen], candidates)
    sub = candidates.substation
    adj: dict[str, list] = {n: [] for n in candidates.node_order}
    for c in chosen:
        adj[c.i].append(c)
        adj[c.j].append(c)
    bad = [t for t in candidates.turbines if len(adj[t]) != 2]
    if bad:
        raise PlanError(f"turbines with degree != 2: {bad}")
    has_dir = f"xplus[{chosen[0].i},{chosen[0].j}]" in model.var_index if chosen else False

    def outward(c) -> bool:
        # whether the direction variables send the ring away from the substation on cable c
        if not has_dir:
            return True
        fwd = _rounded(x, model, "xplus", c.id)
        return fwd == 1 if c.i == sub else fwd == 0

    routes = []
    used = set()
    for c in adj[sub]:
        if c.id in used or not outward(c):
            continue
        route = []
        prev, cur, edge = sub, c.other(sub), c
        while cur != sub:
            used.add(edge.id)
            route.append(cur)
            edge = next(e for e in adj[cur] if e is not edge)
            prev, cur = cur, edge.other(cur)
            if len(route) > len(candidates.turbines):
                raise PlanError("route does not return to the substation")
        used.add(edge.id)
        routes.append(tuple(route))
    covered = {t for r in routes for t in r}
    if covered != set(candidates.turbines) or len(used) != len(chosen):
        raise PlanError("invested cables do not decompose into substation rings")
    return Plan.from_ids(RING, [c.id for c in chosen], candidates, routes)
