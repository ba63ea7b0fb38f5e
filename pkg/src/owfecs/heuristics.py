"""Sweep + Clarke-Wright savings baseline and its start-turbine sensitivity."""

from __future__ import annotations

import csv
import io
import logging
import math
import statistics
from dataclasses import dataclass, field
from typing import Sequence

from .evaluation import RING, Plan, plan_objective, route_cable_ids
from .farm import CandidateSet, Layout, canonical_pair, make_cable, natural_key, to_per_unit

log = logging.getLogger(__name__)

ANGLE_TOL = 1e-9
TWO_PI = 2.0 * math.pi


class HeuristicError(ValueError):
    pass


@dataclass(frozen=True)
class SweepGroups:
    groups: tuple[tuple[str, ...], ...]
    start: str
    direction: str = "counterclockwise"


def _polar(layout: Layout):
    sub = layout.substation
    out = {}
    for t in layout.turbines:
        dx, dy = t.x_km - sub.x_km, t.y_km - sub.y_km
        out[t.id] = (math.atan2(dy, dx) % TWO_PI, math.hypot(dx, dy))
    return out


def sweep_order(layout: Layout, start_wt: str) -> list[str]:
    """Turbines counterclockwise around the substation, beginning at ``start_wt``."""
    polar = _polar(layout)
    if start_wt not in polar:
        raise HeuristicError(f"unknown start turbine {start_wt!r}")
    a0 = polar[start_wt][0]

    def key(tid):
        rel = (polar[tid][0] - a0) % TWO_PI
        if rel > TWO_PI - ANGLE_TOL or tid == start_wt:
            rel = 0.0
        return (round(rel / ANGLE_TOL), polar[tid][1], natural_key(tid))

    ids = sorted(polar, key=key)
    # the start turbine leads even when others share its angle at a smaller radius
    ids.remove(start_wt)
    return [start_wt, *ids]


def sweep_partition(layout: Layout, start_wt: str) -> SweepGroups:
    """Greedy capacity packing of the sweep order into consecutive groups.

    A trailing single turbine cannot form a ring; it takes over the last
    turbine of the previous group when that group keeps at least two.
    """
    cap = layout.cable.capacity_mw
    power = {t.id: t.p_mw for t in layout.turbines}
    groups: list[list[str]] = []
    load = math.inf
    for tid in sweep_order(layout, start_wt):
        if load + power[tid] > cap + 1e-9:
            groups.append([])
            load = 0.0
        groups[-1].append(tid)
        load += power[tid]
    if len(groups) > 1 and len(groups[-1]) == 1 and len(groups[-2]) >= 3:
        moved = groups[-2].pop()
        if power[moved] + power[groups[-1][0]] <= cap + 1e-9:
            groups[-1].insert(0, moved)
        else:
            groups[-2].append(moved)
    return SweepGroups(tuple(tuple(g) for g in groups), start_wt)


@dataclass(frozen=True)
class CwsRoute:
    route: tuple[str, ...]
    fallback: tuple[tuple[str, str], ...] = ()  # cables priced by straight-line length


def _cost(layout: Layout, candidates: CandidateSet, a: str, b: str) -> float:
    if (a, b) in candidates:
        return candidates.get((a, b)).cost
    return make_cable(layout, layout.node(a), layout.node(b)).cost


def cws_route(group: Sequence[str], layout: Layout, candidates: CandidateSet) -> CwsRoute:
    """Chain ``group`` into one ring by parallel savings merges.

    Merging continues past negative savings until a single chain remains,
    because every group must become exactly one ring.
    """
    group = list(group)
    if len(group) < 2:
        raise HeuristicError(f"a ring needs at least two turbines, got {group}")
    if len(set(group)) != len(group):
        raise HeuristicError("duplicate turbines in group")
    sub = layout.substation.id

    def cost(a, b):
        return _cost(layout, candidates, a, b)

    ids = sorted(group, key=natural_key)
    savings = []
    for a in range(len(ids)):
        for b in range(a + 1, len(ids)):
            i, j = ids[a], ids[b]
            s = cost(sub, i) + cost(sub, j) - cost(i, j)
            savings.append((-s, a, b))
    savings.sort()
    chains = {t: [t] for t in ids}  # chain keyed by each endpoint
    for _, a, b in savings:
        i, j = ids[a], ids[b]
        ci, cj = chains.get(i), chains.get(j)
        if ci is None or cj is None or ci is cj:
            continue
        left = ci if ci[-1] == i else ci[::-1]
        right = cj if cj[0] == j else cj[::-1]
        merged = left + right
        for end in (i, j):
            chains.pop(end, None)
        for end in (ci[0], ci[-1], cj[0], cj[-1]):
            chains.pop(end, None)
        chains[merged[0]] = merged
        chains[merged[-1]] = merged
        if len(merged) == len(ids):
            break
    chain = next(iter(chains.values()))
    if len(chain) != len(ids):
        raise HeuristicError("group could not be chained")
    if natural_key(chain[-1]) < natural_key(chain[0]):
        chain = chain[::-1]
    order = candidates.node_order
    flagged = tuple(
        canonical_pair(p, order) for p in route_cable_ids(chain, sub) if p not in candidates
    )
    if flagged:
        log.warning("cws route uses non-candidate cables %s", flagged)
    return CwsRoute(tuple(chain), flagged)


@dataclass(frozen=True)
class HeuristicPlan:
    plan: Plan
    groups: SweepGroups
    fallback: tuple[tuple[str, str], ...] = ()


def sweep_cws_plan(layout: Layout, start_wt: str, candidates: CandidateSet) -> HeuristicPlan:
    groups = sweep_partition(layout, start_wt)
    if any(len(g) < 2 for g in groups.groups):
        raise HeuristicError("sweep left a single-turbine group")
    routes = []
    fallback = []
    for g in groups.groups:
        r = cws_route(g, layout, candidates)
        routes.append(r.route)
        fallback.extend(r.fallback)
    sub = layout.substation.id
    cable_ids = [p for r in routes for p in route_cable_ids(r, sub)]
    plan = Plan.from_ids(RING, cable_ids, candidates, routes, layout=layout)
    return HeuristicPlan(plan, groups, tuple(fallback))


@dataclass(frozen=True)
class SensitivityRow:
    start_id: str
    investment: float
    total: float
    failed: bool = False
    error: str = ""


@dataclass(frozen=True)
class SensitivityTable:
    rows: tuple[SensitivityRow, ...]
    plans: dict = field(default_factory=dict, compare=False, repr=False)

    def _ok(self, attr):
        return [getattr(r, attr) for r in self.rows if not r.failed]

    @property
    def min(self) -> float:
        return min(self._ok("total"), default=math.nan)

    @property
    def max(self) -> float:
        return max(self._ok("total"), default=math.nan)

    @property
    def mean(self) -> float:
        vals = self._ok("total")
        return statistics.fmean(vals) if vals else math.nan

    @property
    def spread(self) -> float:
        """(max - min) / min over successful starts."""
        return (self.max - self.min) / self.min if self._ok("total") else math.nan

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["start_id", "investment", "total"])
        for r in self.rows:
            if r.failed:
                w.writerow([r.start_id, "failed", "failed"])
            else:
                w.writerow([r.start_id, repr(r.investment), repr(r.total)])
        return buf.getvalue()


def sweep_sensitivity(layout: Layout, candidates: CandidateSet, loss_model: str = "pwl") -> SensitivityTable:
    """Run the heuristic from every start turbine; total is investment plus lifetime loss."""
    net = to_per_unit(layout)
    rows = []
    plans = {}
    for t in layout.turbines:
        try:
            hp = sweep_cws_plan(layout, t.id, candidates)
            inv = sum(c.cost for c in hp.plan.cables)
            total = plan_objective(hp.plan, net, loss_model)
        except (HeuristicError, ValueError) as exc:
            rows.append(SensitivityRow(t.id, math.nan, math.nan, True, str(exc)))
            continue
        plans[t.id] = hp
        rows.append(SensitivityRow(t.id, inv, total))
    return SensitivityTable(tuple(rows), plans)
