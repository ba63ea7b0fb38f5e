"""Exhaustive reference solvers for tiny farms.

The ring oracle enumerates every candidate route (a simple turbine path whose
two ends attach to the substation) and then every partition of the turbines
into such routes. Rings meet only at the substation, whose angle is the
reference, so each ring's flows and losses are independent of the others and
the plan cost is a sum of route costs. Ring flows are computed in closed form
here rather than through the network solver, which keeps the oracle
independent of the code it checks.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ..crossing import CrossingSet
from ..evaluation import RADIAL, RING, Plan
from ..farm import CandidateSet, NetworkParams
from ..model import ModelOptions, pwl_square, tangent_points

MAX_TURBINES = 9
CAP_TOL = 1e-9


class InstanceTooLargeError(ValueError):
    pass


class OracleInfeasibleError(ValueError):
    pass


@dataclass(frozen=True)
class OracleResult:
    plan: Plan
    objective: float
    investment: float
    loss_cost: float
    loss_model: str
    n_candidates: int  # routes (ring) or spanning trees (radial) evaluated


@dataclass(frozen=True)
class _Route:
    turbines: tuple[str, ...]
    cost: float
    investment: float
    loss: float
    mask: int  # cable bits
    conflicts: int  # bits of cables crossing any cable of the route


def _loss_fn(net: NetworkParams, loss_model: str, pwl_tangents: int):
    if loss_model == "exact":
        return lambda p: p * p
    if loss_model == "pwl":
        pts = tangent_points(net.capacity_pu, pwl_tangents)
        return lambda p: float(pwl_square(p, pts))
    raise ValueError(f"unknown loss model {loss_model!r}")


def ring_flows(powers, susceptances):
    """Flows along a ring Sub -> v1 -> ... -> vk -> Sub and the node angles.

    ``powers`` has k entries, ``susceptances`` k + 1 (one per cable, in route
    order). Flows are positive in route direction.
    """
    p = np.asarray(powers, dtype=float)
    inv_b = 1.0 / np.asarray(susceptances, dtype=float)
    gathered = np.concatenate([[0.0], np.cumsum(p)])  # injected before each cable
    # flow on cable e is F0 + gathered_e and the angle drops around the loop sum to zero
    f0 = -float(gathered @ inv_b / inv_b.sum())
    flows = f0 + gathered
    theta = -np.cumsum(flows[:-1] * inv_b[:-1])
    return flows, theta


def _crossing_masks(candidates: CandidateSet, crossings: CrossingSet | None) -> list[int]:
    masks = [0] * len(candidates.cables)
    if crossings is None:
        return masks
    for a, b in crossings.pairs:
        ia, ib = candidates.index(a), candidates.index(b)
        masks[ia] |= 1 << ib
        masks[ib] |= 1 << ia
    return masks


def _guard(net: NetworkParams, max_turbines: int):
    n = len(net.turbines)
    if n > max_turbines:
        raise InstanceTooLargeError(f"{n} turbines exceeds the oracle guard of {max_turbines}")
    if n == 0:
        raise OracleInfeasibleError("no turbines")


def enumerate_routes(
    net: NetworkParams,
    candidates: CandidateSet,
    crossings: CrossingSet | None,
    loss_model: str = "pwl",
    pwl_tangents: int = ModelOptions().pwl_tangents,
    theta_bound: float = ModelOptions().theta_bound,
) -> dict[int, list[_Route]]:
    """All feasible single routes, grouped by turbine bitmask and sorted by cost."""
    sub = net.substation
    turbines = list(net.turbines)
    bit = {t: 1 << k for k, t in enumerate(turbines)}
    order = {t: k for k, t in enumerate(turbines)}
    cap = net.capacity_pu
    loss_of = _loss_fn(net, loss_model, pwl_tangents)
    cross = _crossing_masks(candidates, crossings)
    lookup = {}
    for k, c in enumerate(candidates.cables):
        lookup[(c.i, c.j)] = lookup[(c.j, c.i)] = k
    neighbours = {t: [] for t in turbines}
    for c in candidates.cables:
        if sub not in c.id:
            neighbours[c.i].append(c.j)
            neighbours[c.j].append(c.i)
    for t in turbines:
        neighbours[t].sort(key=order.__getitem__)
    starts = [t for t in turbines if (sub, t) in lookup]
    routes: dict[int, list[_Route]] = {}

    def emit(path):
        seq = [sub, *path, sub]
        ks = [lookup[(a, b)] for a, b in zip(seq, seq[1:])]
        mask = 0
        conflicts = 0
        for k in ks:
            mask |= 1 << k
            conflicts |= cross[k]
        if mask & conflicts:
            return  # route crosses itself
        cables = [candidates.cables[k] for k in ks]
        flows, theta = ring_flows([net.p_pu[t] for t in path], [c.b_pu for c in cables])
        if np.any(np.abs(flows) > cap + CAP_TOL) or np.any(np.abs(theta) > theta_bound):
            return
        inv = sum(c.cost for c in cables)
        loss = net.loss_price * sum(c.r_pu * loss_of(f) for c, f in zip(cables, flows))
        subset = sum(bit[t] for t in path)
        routes.setdefault(subset, []).append(_Route(tuple(path), inv + loss, inv, loss, mask, conflicts))

    def extend(path, seen, load):
        last = path[-1]
        if len(path) >= 2 and (sub, last) in lookup and order[path[0]] < order[last]:
            emit(path)
        for nxt in neighbours[last]:
            if nxt in seen:
                continue
            p = load + net.p_pu[nxt]
            if p > cap + CAP_TOL:
                continue
            seen.add(nxt)
            path.append(nxt)
            extend(path, seen, p)
            path.pop()
            seen.discard(nxt)

    for s in starts:
        if net.p_pu[s] <= cap + CAP_TOL:
            extend([s], {s}, net.p_pu[s])
    for lst in routes.values():
        lst.sort(key=lambda r: r.cost)
    return routes


def brute_force_oracle(
    net: NetworkParams,
    candidates: CandidateSet,
    crossings: CrossingSet | None,
    loss_model: str = "pwl",
    pwl_tangents: int = ModelOptions().pwl_tangents,
    theta_bound: float = ModelOptions().theta_bound,
    max_turbines: int = MAX_TURBINES,
) -> OracleResult:
    """Cheapest crossing-free partition of the turbines into substation rings.

    The default ``loss_model="pwl"`` values losses with the same tangent
    envelope as the MILP, so the two objectives are directly comparable;
    ``"exact"`` uses ``r * P**2``. Pass ``crossings=None`` to allow crossings.
    """
    _guard(net, max_turbines)
    routes = enumerate_routes(net, candidates, crossings, loss_model, pwl_tangents, theta_bound)
    n = len(net.turbines)
    full = (1 << n) - 1
    best_single = {s: lst[0].cost for s, lst in routes.items()}

    # lower bound per turbine subset, ignoring crossings between routes
    bound = [math.inf] * (full + 1)
    bound[0] = 0.0
    for s in range(1, full + 1):
        low = s & -s
        rest = s ^ low
        sub = rest
        best = math.inf
        while True:
            part = sub | low
            c = best_single.get(part)
            if c is not None:
                v = c + bound[s ^ part]
                if v < best:
                    best = v
            if sub == 0:
                break
            sub = (sub - 1) & rest
        bound[s] = best
    if not math.isfinite(bound[full]):
        raise OracleInfeasibleError("no partition of the turbines into feasible rings")

    best_cost = math.inf
    best_plan: list[_Route] | None = None
    chosen: list[_Route] = []
    slack = 1e-9

    def search(remaining, cost, mask, conflicts):
        nonlocal best_cost, best_plan
        if remaining == 0:
            if cost < best_cost:
                best_cost = cost
                best_plan = list(chosen)
            return
        low = remaining & -remaining
        rest = remaining ^ low
        sub = rest
        while True:
            part = sub | low
            lst = routes.get(part)
            if lst is not None:
                tail = bound[remaining ^ part]
                for r in lst:
                    if cost + r.cost + tail >= best_cost - slack * abs(best_cost):
                        break
                    if r.mask & conflicts or r.conflicts & mask:
                        continue
                    chosen.append(r)
                    search(remaining ^ part, cost + r.cost, mask | r.mask, conflicts | r.conflicts)
                    chosen.pop()
            if sub == 0:
                break
            sub = (sub - 1) & rest

    search(full, 0.0, 0, 0)
    if best_plan is None:
        raise OracleInfeasibleError("every ring partition contains crossing cables")
    sub_id = net.substation
    cable_ids = []
    for r in best_plan:
        seq = [sub_id, *r.turbines, sub_id]
        cable_ids.extend(zip(seq, seq[1:]))
    cable_ids = [candidates.get(c).id for c in cable_ids]
    order = {t: k for k, t in enumerate(net.turbines)}
    route_list = sorted((r.turbines for r in best_plan), key=lambda t: order[t[0]])
    plan = Plan.from_ids(RING, cable_ids, candidates, route_list)
    inv = sum(r.investment for r in best_plan)
    loss = sum(r.loss for r in best_plan)
    return OracleResult(plan, inv + loss, inv, loss, loss_model, sum(map(len, routes.values())))


def brute_force_radial(
    net: NetworkParams,
    candidates: CandidateSet,
    crossings: CrossingSet | None,
    loss_model: str = "pwl",
    pwl_tangents: int = ModelOptions().pwl_tangents,
    theta_bound: float = ModelOptions().theta_bound,
    max_trees: int = 2_000_000,
) -> OracleResult:
    """Cheapest crossing-free spanning tree meeting capacity, by enumerating cable subsets."""
    n = len(net.turbines)
    if n == 0:
        raise OracleInfeasibleError("no turbines")
    cables = candidates.cables
    if math.comb(len(cables), n) > max_trees:
        raise InstanceTooLargeError(f"C({len(cables)}, {n}) cable subsets exceeds {max_trees}")
    nodes = list(candidates.node_order)
    idx = {v: k for k, v in enumerate(nodes)}
    sub = net.substation
    cap = net.capacity_pu
    loss_of = _loss_fn(net, loss_model, pwl_tangents)
    cross = _crossing_masks(candidates, crossings)
    power = [0.0 if v == sub else net.p_pu[v] for v in nodes]
    best = (math.inf, None, 0.0, 0.0)
    count = 0
    for combo in itertools.combinations(range(len(cables)), n):
        parent = list(range(len(nodes)))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        tree = True
        mask = conflicts = 0
        inv = 0.0
        for k in combo:
            c = cables[k]
            ra, rb = find(idx[c.i]), find(idx[c.j])
            if ra == rb:
                tree = False
                break
            parent[ra] = rb
            mask |= 1 << k
            conflicts |= cross[k]
            inv += c.cost
        if not tree or mask & conflicts or inv >= best[0]:
            continue
        count += 1
        adj: dict[int, list[int]] = {}
        for k in combo:
            c = cables[k]
            adj.setdefault(idx[c.i], []).append(k)
            adj.setdefault(idx[c.j], []).append(k)
        # orient away from the substation, then push subtree sums up
        order, via = [idx[sub]], {idx[sub]: None}
        for v in order:
            for k in adj.get(v, ()):
                c = cables[k]
                w = idx[c.j] if idx[c.i] == v else idx[c.i]
                if w not in via:
                    via[w] = (k, v)
                    order.append(w)
        load = list(power)
        flow = {}
        for v in reversed(order[1:]):
            k, up = via[v]
            flow[k] = load[v]
            load[up] += load[v]
        if any(abs(f) > cap + CAP_TOL for f in flow.values()):
            continue
        theta = {idx[sub]: 0.0}
        ok = True
        for v in order[1:]:
            k, up = via[v]
            theta[v] = theta[up] - flow[k] / cables[k].b_pu
            if abs(theta[v]) > theta_bound:
                ok = False
        if not ok:
            continue
        loss = net.loss_price * sum(cables[k].r_pu * loss_of(f) for k, f in flow.items())
        if inv + loss < best[0]:
            best = (inv + loss, combo, inv, loss)
    if best[1] is None:
        raise OracleInfeasibleError("no feasible radial tree")
    plan = Plan.from_ids(RADIAL, [cables[k].id for k in best[1]], candidates)
    return OracleResult(plan, best[0], best[2], best[3], loss_model, count)
