"""DC power flow, loss and reliability costing, and verification of fixed plans."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .crossing import CrossingSet
from .farm import CandidateCable, CandidateSet, EconomicParams, Layout, NetworkParams, make_cable

RING = "ring"
RADIAL = "radial"

CAPACITY_TOL = 1e-9


class PlanError(ValueError):
    pass


class DisconnectedPlanError(PlanError):
    """The invested cables leave some turbine without a path to the substation."""


@dataclass(frozen=True)
class Plan:
    topology: str
    cables: tuple[CandidateCable, ...]
    routes: tuple[tuple[str, ...], ...] = ()

    @property
    def cable_ids(self) -> tuple[tuple[str, str], ...]:
        return tuple(c.id for c in self.cables)

    def to_dict(self) -> dict:
        return {
            "topology": self.topology,
            "cables": [list(c) for c in self.cable_ids],
            "routes": [list(r) for r in self.routes],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_ids(
        cls,
        topology: str,
        cable_ids: Iterable[Sequence[str]],
        candidates: CandidateSet,
        routes: Iterable[Sequence[str]] = (),
        layout: Layout | None = None,
    ) -> "Plan":
        """Resolve cable ids against ``candidates``.

        Cables missing from the candidate set are derived from ``layout`` when
        given (``verify_plan`` then reports them); otherwise they are an error.
        """
        if topology not in (RING, RADIAL):
            raise PlanError(f"unknown topology {topology!r}")
        cables = []
        for cid in cable_ids:
            cid = tuple(cid)
            if cid in candidates:
                cables.append(candidates.get(cid))
            elif layout is not None:
                cables.append(make_cable(layout, layout.node(cid[0]), layout.node(cid[1])))
            else:
                raise PlanError(f"cable {cid} is not a candidate")
        order = {nid: k for k, nid in enumerate(candidates.node_order)}
        cables.sort(key=lambda c: (order[c.i], order[c.j]))
        return cls(topology, tuple(cables), tuple(tuple(r) for r in routes))

    @classmethod
    def from_dict(cls, doc: Mapping, candidates: CandidateSet, layout: Layout | None = None) -> "Plan":
        unknown = set(doc) - {"topology", "cables", "routes"}
        if unknown:
            raise PlanError(f"unknown plan fields {sorted(unknown)}")
        return cls.from_ids(doc["topology"], doc["cables"], candidates, doc.get("routes", ()), layout)

    @classmethod
    def from_json(cls, text: str, candidates: CandidateSet, layout: Layout | None = None) -> "Plan":
        return cls.from_dict(json.loads(text), candidates, layout)


def route_cable_ids(route: Sequence[str], substation: str) -> list[tuple[str, str]]:
    seq = [substation, *route, substation]
    return list(zip(seq, seq[1:]))


# --------------------------------------------------------------------------
# DC power flow


@dataclass(frozen=True)
class FlowState:
    flows: Mapping[tuple[str, str], float]  # per unit, positive from cable.i to cable.j
    theta: Mapping[str, float]
    shed: Mapping[str, float]
    p_sub: float
    cables: tuple[CandidateCable, ...] = ()
    s_base_mva: float = 100.0

    @property
    def loss_pu(self) -> float:
        return float(sum(c.r_pu * self.flows[c.id] ** 2 for c in self.cables))


def _adjacency(nodes: Sequence[str], cables: Sequence[CandidateCable]) -> dict[str, list[str]]:
    adj: dict[str, list[str]] = {n: [] for n in nodes}
    for c in cables:
        adj[c.i].append(c.j)
        adj[c.j].append(c.i)
    return adj


def _reachable(start: str, adj: Mapping[str, list[str]]) -> set[str]:
    seen = {start}
    queue = deque([start])
    while queue:
        n = queue.popleft()
        for m in adj[n]:
            if m not in seen:
                seen.add(m)
                queue.append(m)
    return seen


def dc_power_flow(plan: Plan, net: NetworkParams, cables: Sequence[CandidateCable] | None = None) -> FlowState:
    """Solve ``B theta = p`` with the substation angle fixed at zero.

    ``cables`` overrides the plan's cable list (used for contingency cases).
    """
    cables = tuple(plan.cables if cables is None else cables)
    sub = net.substation
    turbines = net.turbines
    nodes = (sub, *turbines)
    adj = _adjacency(nodes, cables)
    reach = _reachable(sub, adj)
    missing = [t for t in turbines if t not in reach]
    if missing:
        raise DisconnectedPlanError(f"turbines not connected to the substation: {missing}")
    pos = {t: k for k, t in enumerate(turbines)}
    n = len(turbines)
    B = np.zeros((n, n))
    for c in cables:
        for a, bnode in ((c.i, c.j), (c.j, c.i)):
            if a != sub:
                B[pos[a], pos[a]] += c.b_pu
                if bnode != sub:
                    B[pos[a], pos[bnode]] -= c.b_pu
    p = np.array([net.p_pu[t] for t in turbines])
    th = np.linalg.solve(B, p) if n else np.zeros(0)
    theta = {sub: 0.0, **{t: float(th[pos[t]]) for t in turbines}}
    flows = {c.id: c.b_pu * (theta[c.i] - theta[c.j]) for c in cables}
    return FlowState(
        flows=flows,
        theta=theta,
        shed={t: 0.0 for t in turbines},
        p_sub=float(p.sum()),
        cables=cables,
        s_base_mva=net.s_base_mva,
    )


def balance_residuals(flow: FlowState, net: NetworkParams) -> dict[str, float]:
    """Net outflow minus (injection - shed) per node; the substation absorbs ``p_sub``."""
    res = {net.substation: flow.p_sub}
    for t in net.turbines:
        res[t] = -(net.p_pu[t] - flow.shed[t])
    for c in flow.cables:
        f = flow.flows[c.id]
        res[c.i] += f
        res[c.j] -= f
    return res


class LossCost(NamedTuple):
    cost: float
    loss_rate: float  # percent of generation
    loss_pu: float


def loss_cost(flow: FlowState, net: NetworkParams) -> LossCost:
    loss = flow.loss_pu
    total = net.total_pu
    rate = 100.0 * loss / total if total > 0 else 0.0
    return LossCost(net.loss_price * loss, rate, loss)


def eeng_cost(plan: Plan, flow: FlowState, econ: EconomicParams) -> float:
    """Lifetime cost of energy not generated during cable repairs.

    Ring plans keep every turbine connected after any single outage and are
    charged nothing. Power is taken in MW and failure rate per km-year.
    """
    if plan.topology == RING:
        return 0.0
    exposure = sum(c.length_km * abs(flow.flows[c.id]) * flow.s_base_mva for c in plan.cables)
    return (
        econ.energy_price_per_mwh
        * econ.mttr_hours
        * econ.planning_years
        * econ.failure_rate_per_km_yr
        * exposure
    )


def plan_objective(plan: Plan, net: NetworkParams, loss_model: str = "exact", points=None) -> float:
    """Investment plus lifetime loss cost, with exact or tangent-envelope losses.

    ``points`` are the tangent points for ``loss_model="pwl"``; by default the
    model's 9 points over the cable capacity.
    """
    flow = dc_power_flow(plan, net)
    inv = sum(c.cost for c in plan.cables)
    if loss_model == "exact":
        loss = flow.loss_pu
    elif loss_model == "pwl":
        from .model import ModelOptions, pwl_square, tangent_points

        if points is None:
            points = tangent_points(net.capacity_pu, ModelOptions().pwl_tangents)
        loss = sum(c.r_pu * float(pwl_square(flow.flows[c.id], np.asarray(points))) for c in plan.cables)
    else:
        raise ValueError(f"unknown loss model {loss_model!r}")
    return inv + net.loss_price * loss


# --------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""
    items: tuple = ()


@dataclass(frozen=True)
class VerificationReport:
    checks: tuple[Check, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [
                {"name": c.name, "passed": c.passed, "detail": c.detail, "items": _jsonable(c.items)}
                for c in self.checks
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _jsonable(obj):
    if isinstance(obj, (tuple, list)):
        return [_jsonable(o) for o in obj]
    return obj


def _degree_check(plan: Plan, net: NetworkParams) -> Check:
    sub = net.substation
    deg = {n: 0 for n in (sub, *net.turbines)}
    for c in plan.cables:
        deg[c.i] += 1
        deg[c.j] += 1
    problems = []
    if plan.topology == RING:
        bad = [t for t in net.turbines if deg[t] != 2]
        if bad:
            problems.append(f"turbines without degree 2: {bad}")
        seen = [t for r in plan.routes for t in r]
        if sorted(seen) != sorted(net.turbines):
            problems.append("routes do not cover every turbine exactly once")
        route_edges = {frozenset(e) for r in plan.routes for e in route_cable_ids(r, sub)}
        plan_edges = {frozenset(c) for c in plan.cable_ids}
        if route_edges != plan_edges or any(len(r) < 2 for r in plan.routes):
            problems.append("routes do not match the invested cables")
        if deg[sub] != 2 * len(plan.routes):
            problems.append(f"substation degree {deg[sub]} != 2 x {len(plan.routes)} routes")
    else:
        if len(plan.cables) != len(net.turbines):
            problems.append(f"{len(plan.cables)} cables for {len(net.turbines)} turbines")
        reach = _reachable(sub, _adjacency(deg, plan.cables))
        if len(reach) != len(deg):
            problems.append("cables do not span every turbine")
    return Check("degree", not problems, "; ".join(problems))


def _capacity_ok(flow: FlowState, cap: float) -> list[tuple[str, str]]:
    return [cid for cid, f in flow.flows.items() if abs(f) > cap + CAPACITY_TOL]


def verify_plan(plan: Plan, net: NetworkParams, candidates: CandidateSet, crossings: CrossingSet) -> VerificationReport:
    checks = []
    cap = net.capacity_pu
    foreign = [c.id for c in plan.cables if c.id not in candidates]
    checks.append(Check("candidates", not foreign, f"non-candidate cables: {foreign}" if foreign else "", tuple(foreign)))
    checks.append(_degree_check(plan, net))

    if plan.topology == RING:
        over = [
            (r, sum(net.p_pu[t] for t in r))
            for r in plan.routes
            if sum(net.p_pu[t] for t in r) > cap + CAPACITY_TOL
        ]
        checks.append(
            Check("route_capacity", not over, f"routes over capacity: {[r for r, _ in over]}" if over else "", tuple(r for r, _ in over))
        )
    else:
        checks.append(Check("route_capacity", True, "not applicable to radial plans"))

    bad_pairs = crossings.violations(plan.cable_ids)
    checks.append(
        Check("no_crossing", not bad_pairs, f"crossing pairs: {bad_pairs}" if bad_pairs else "", tuple(bad_pairs))
    )

    try:
        base = dc_power_flow(plan, net)
        overloaded = _capacity_ok(base, cap)
        checks.append(
            Check("base_flow", not overloaded, f"overloaded cables: {overloaded}" if overloaded else "", tuple(overloaded))
        )
    except (DisconnectedPlanError, np.linalg.LinAlgError) as exc:
        checks.append(Check("base_flow", False, str(exc)))

    failures = []
    for k, c in enumerate(plan.cables):
        rest = plan.cables[:k] + plan.cables[k + 1 :]
        try:
            post = dc_power_flow(plan, net, rest)
        except DisconnectedPlanError:
            failures.append((c.id, "disconnects turbines"))
            continue
        over = _capacity_ok(post, cap)
        if over:
            failures.append((c.id, f"overloads {over}"))
    checks.append(
        Check(
            "n_minus_1",
            not failures and bool(plan.cables),
            "; ".join(f"outage {cid}: {why}" for cid, why in failures) or ("" if plan.cables else "no cables"),
            tuple(cid for cid, _ in failures),
        )
    )
    return VerificationReport(tuple(checks))


# --------------------------------------------------------------------------
# cost report


@dataclass(frozen=True)
class CostReport:
    investment: float
    operation: float
    eeng: float
    total: float
    loss_rate: float
    gap: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, doc: Mapping) -> "CostReport":
        return cls(**doc)

    @classmethod
    def from_json(cls, text: str) -> "CostReport":
        return cls.from_dict(json.loads(text))


def cost_report(plan: Plan, net: NetworkParams, econ: EconomicParams | None = None, gap: float | None = None) -> CostReport:
    econ = econ or net.economics
    flow = dc_power_flow(plan, net)
    inv = float(sum(c.cost for c in plan.cables))
    lc = loss_cost(flow, net)
    eeng = float(eeng_cost(plan, flow, econ))
    return CostReport(
        investment=inv,
        operation=float(lc.cost),
        eeng=eeng,
        total=inv + float(lc.cost) + eeng,
        loss_rate=float(lc.loss_rate),
        gap=gap,
    )
