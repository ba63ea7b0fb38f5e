"""Mixed-integer model of the ring (and radial) collector system plan.

The quadratic loss ``r * P**2`` is replaced by an epigraph variable bounded
below by tangent lines of ``P**2``, so the whole model stays linear.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from .crossing import CrossingSet
from .farm import CandidateError, CandidateSet, NetworkParams, r_min

BINARY = "binary"
CONTINUOUS = "continuous"
LE, EQ, GE = "<=", "=", ">="


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str
    lower: float
    upper: float
    priority: int | None = None  # branching order: lower first


@dataclass(frozen=True)
class Constraint:
    coeffs: tuple[tuple[int, float], ...]
    sense: str
    rhs: float
    name: str = ""
    family: str = ""


@dataclass(frozen=True)
class MilpModel:
    variables: tuple[Variable, ...]
    constraints: tuple[Constraint, ...]
    objective: tuple[float, ...]
    constant: float = 0.0
    var_index: Mapping[str, int] = field(default_factory=dict)
    meta: Mapping[str, object] = field(default_factory=dict)

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def n_constraints(self) -> int:
        return len(self.constraints)

    def col(self, name: str) -> int:
        return self.var_index[name]

    def family(self, family: str) -> list[Constraint]:
        return [c for c in self.constraints if c.family == family]

    @property
    def binary_mask(self) -> np.ndarray:
        return np.array([v.kind == BINARY for v in self.variables], dtype=bool)

    def count(self, kind: str) -> int:
        return sum(v.kind == kind for v in self.variables)

    def to_arrays(self):
        """Dense ``(c, A, sense, b, lower, upper)``; sense is -1/0/+1 for <=/=/>=."""
        n, m = self.n_vars, self.n_constraints
        A = np.zeros((m, n))
        sense = np.empty(m, dtype=np.int8)
        b = np.empty(m)
        code = {LE: -1, EQ: 0, GE: 1}
        for r, con in enumerate(self.constraints):
            for j, v in con.coeffs:
                A[r, j] += v
            sense[r] = code[con.sense]
            b[r] = con.rhs
        c = np.asarray(self.objective, dtype=float)
        lo = np.array([v.lower for v in self.variables], dtype=float)
        hi = np.array([v.upper for v in self.variables], dtype=float)
        return c, A, sense, b, lo, hi

    def objective_value(self, values) -> float:
        return float(np.dot(self.objective, values)) + self.constant

    def max_violation(self, values) -> float:
        """Largest constraint or bound violation of a full column vector."""
        x = np.asarray(values, dtype=float)
        worst = 0.0
        for con in self.constraints:
            lhs = sum(v * x[j] for j, v in con.coeffs)
            if con.sense == LE:
                worst = max(worst, lhs - con.rhs)
            elif con.sense == GE:
                worst = max(worst, con.rhs - lhs)
            else:
                worst = max(worst, abs(lhs - con.rhs))
        lo = np.array([v.lower for v in self.variables])
        hi = np.array([v.upper for v in self.variables])
        worst = max(worst, float(np.max(lo - x, initial=0.0)), float(np.max(x - hi, initial=0.0)))
        return worst


class ModelBuilder:
    def __init__(self, model: MilpModel | None = None):
        self.variables: list[Variable] = []
        self.constraints: list[Constraint] = []
        self.objective: list[float] = []
        self.index: dict[str, int] = {}
        self.constant = 0.0
        self.meta: dict = {}
        if model is not None:
            self.variables = list(model.variables)
            self.constraints = list(model.constraints)
            self.objective = list(model.objective)
            self.index = dict(model.var_index)
            self.constant = model.constant
            self.meta = dict(model.meta)

    def var(self, name, kind=CONTINUOUS, lower=0.0, upper=math.inf, obj=0.0, priority=None) -> int:
        if name in self.index:
            raise ModelError(f"duplicate variable {name}")
        if kind == BINARY:
            lower, upper = 0.0, 1.0
            priority = 0 if priority is None else priority
        self.index[name] = len(self.variables)
        self.variables.append(Variable(name, kind, float(lower), float(upper), priority))
        self.objective.append(float(obj))
        return self.index[name]

    def con(self, coeffs: Iterable[tuple[int, float]], sense: str, rhs: float, name="", family=""):
        merged: dict[int, float] = {}
        for j, v in coeffs:
            merged[j] = merged.get(j, 0.0) + float(v)
        terms = tuple((j, v) for j, v in merged.items() if v != 0.0)
        self.constraints.append(Constraint(terms, sense, float(rhs), name, family))

    def build(self) -> MilpModel:
        return MilpModel(
            variables=tuple(self.variables),
            constraints=tuple(self.constraints),
            objective=tuple(self.objective),
            constant=self.constant,
            var_index=MappingProxyType(dict(self.index)),
            meta=MappingProxyType(dict(self.meta)),
        )


@dataclass(frozen=True)
class ModelOptions:
    pwl_tangents: int = 9
    enable_kdct: bool = True
    y0: int | None = None  # None: R_min
    enable_cac: bool = True
    big_m: float | None = None  # None: the layout's economics
    theta_bound: float = math.pi / 4

    def __post_init__(self):
        if self.pwl_tangents < 2:
            raise ModelError("pwl_tangents must be at least 2")
        if self.y0 is not None and self.y0 < 0:
            raise ModelError("y0 must be nonnegative")
        if not self.theta_bound > 0:
            raise ModelError("theta_bound must be positive")


def tangent_points(capacity_pu: float, k: int) -> np.ndarray:
    return np.linspace(-capacity_pu, capacity_pu, k)


def tangent_spacing(capacity_pu: float, k: int) -> float:
    return 2.0 * capacity_pu / (k - 1)


def pwl_square(p, points: np.ndarray):
    """Tangent envelope of ``p**2`` (never below zero)."""
    p = np.asarray(p, dtype=float)
    vals = 2.0 * np.multiply.outer(p, points) - points**2
    return np.maximum(vals.max(axis=-1), 0.0)


def _name(prefix: str, *ids: str) -> str:
    return f"{prefix}[{','.join(ids)}]"


def _check_candidates(net: NetworkParams, candidates: CandidateSet) -> None:
    thin = [t for t in net.turbines if len(candidates.adjacency.get(t, ())) < 2]
    if thin:
        raise CandidateError(f"turbines with fewer than 2 candidate cables: {thin}")


def _flow_part(b: ModelBuilder, net: NetworkParams, candidates: CandidateSet, crossings: CrossingSet, opts: ModelOptions):
    """Investment columns, DC flow (balance, angle coupling, capacity), losses and CAC."""
    sub = net.substation
    cap = net.capacity_pu
    big_m = opts.big_m if opts.big_m is not None else net.economics.big_m
    shed_price = big_m * net.s_base_mva
    points = tangent_points(cap, opts.pwl_tangents)
    tb = opts.theta_bound

    for c in candidates.cables:
        b.var(_name("x", *c.id), "binary", obj=c.cost)
    for c in candidates.cables:
        b.var(_name("P", *c.id), lower=-cap, upper=cap)
    for c in candidates.cables:
        b.var(_name("loss", *c.id), lower=0.0, upper=cap * cap, obj=net.loss_price * c.r_pu)
    for t in net.turbines:
        b.var(_name("shed", t), lower=0.0, upper=net.p_pu[t], obj=shed_price)
    b.var(_name("theta", sub), lower=0.0, upper=0.0)
    for t in net.turbines:
        b.var(_name("theta", t), lower=-tb, upper=tb)
    b.var(_name("psub", sub), lower=0.0, upper=net.total_pu)

    ix = b.index
    # node balance: net outflow over incident cables equals injection
    for node in candidates.node_order:
        terms = []
        for k in candidates.adjacency[node]:
            c = candidates.cables[k]
            sign = 1.0 if c.i == node else -1.0
            terms.append((ix[_name("P", *c.id)], sign))
        if node == sub:
            terms.append((ix[_name("psub", sub)], 1.0))
            b.con(terms, EQ, 0.0, _name("bal", node), "bal_sub")
        else:
            terms.append((ix[_name("shed", node)], 1.0))
            b.con(terms, EQ, net.p_pu[node], _name("bal", node), "bal")
    for c in candidates.cables:
        x, p = ix[_name("x", *c.id)], ix[_name("P", *c.id)]
        ti, tj = ix[_name("theta", c.i)], ix[_name("theta", c.j)]
        m_flow = c.b_pu * 2.0 * tb
        b.con([(p, 1.0), (ti, -c.b_pu), (tj, c.b_pu), (x, m_flow)], LE, m_flow, _name("kvl_hi", *c.id), "kvl")
        b.con([(p, -1.0), (ti, c.b_pu), (tj, -c.b_pu), (x, m_flow)], LE, m_flow, _name("kvl_lo", *c.id), "kvl")
        b.con([(p, 1.0), (x, -cap)], LE, 0.0, _name("cap_hi", *c.id), "cap")
        b.con([(p, 1.0), (x, cap)], GE, 0.0, _name("cap_lo", *c.id), "cap")
    for c in candidates.cables:
        lcol, p = ix[_name("loss", *c.id)], ix[_name("P", *c.id)]
        for k, pk in enumerate(points):
            b.con([(lcol, 1.0), (p, -2.0 * pk)], GE, -pk * pk, _name("pwl", *c.id, str(k)), "pwl")
    n_cac = 0
    if opts.enable_cac:
        for (a, bb) in crossings.pairs:
            b.con([(ix[_name("x", *a)], 1.0), (ix[_name("x", *bb)], 1.0)], LE, 1.0, _name("cac", *a, *bb), "cac")
            n_cac += 1
    b.meta.update(
        cables=tuple(c.id for c in candidates.cables),
        tangent_points=tuple(float(v) for v in points),
        capacity_pu=cap,
        loss_price=net.loss_price,
        shed_price=shed_price,
        theta_bound=tb,
        n_cac=n_cac,
        r_min=r_min(net.layout),
    )


def build_ring_model(
    net: NetworkParams,
    candidates: CandidateSet,
    crossings: CrossingSet,
    opts: ModelOptions = ModelOptions(),
) -> MilpModel:
    """Double-sided ring plan: routing (direction split, in/out degree, MTZ) plus DC flow."""
    _check_candidates(net, candidates)
    b = ModelBuilder()
    _flow_part(b, net, candidates, crossings, opts)
    sub = net.substation
    cap = net.capacity_pu
    for c in candidates.cables:
        b.var(_name("xplus", *c.id), "binary", priority=1)
        b.var(_name("xminus", *c.id), "binary", priority=1)
    for t in net.turbines:
        b.var(_name("u", t), lower=net.p_pu[t], upper=cap)
    ix = b.index
    for c in candidates.cables:
        b.con(
            [(ix[_name("xplus", *c.id)], 1.0), (ix[_name("xminus", *c.id)], 1.0), (ix[_name("x", *c.id)], -1.0)],
            EQ, 0.0, _name("dir", *c.id), "dir",
        )
    for t in net.turbines:
        out_terms, in_terms = [], []
        for k in candidates.adjacency[t]:
            c = candidates.cables[k]
            fwd, bwd = ix[_name("xplus", *c.id)], ix[_name("xminus", *c.id)]
            if c.i == t:
                out_terms.append((fwd, 1.0))
                in_terms.append((bwd, 1.0))
            else:
                out_terms.append((bwd, 1.0))
                in_terms.append((fwd, 1.0))
        b.con(out_terms, EQ, 1.0, _name("out", t), "out")
        b.con(in_terms, EQ, 1.0, _name("in", t), "in")
    for c in candidates.cables:
        if sub in c.id:
            continue
        ui, uj = ix[_name("u", c.i)], ix[_name("u", c.j)]
        fwd, bwd = ix[_name("xplus", *c.id)], ix[_name("xminus", *c.id)]
        b.con([(ui, 1.0), (uj, -1.0), (fwd, cap)], LE, cap - net.p_pu[c.j], _name("mtz_fwd", *c.id), "mtz")
        b.con([(uj, 1.0), (ui, -1.0), (bwd, cap)], LE, cap - net.p_pu[c.i], _name("mtz_bwd", *c.id), "mtz")
    b.meta["topology"] = "ring"
    model = b.build()
    if opts.enable_kdct:
        model = add_kdct(model, net, candidates, opts.y0)
    return model


def add_kdct(model: MilpModel, net: NetworkParams, candidates: CandidateSet, y0: int | None = None) -> MilpModel:
    """Add the minimum k-degree centre tree description of the ring plan."""
    rmin = r_min(net.layout)
    y0 = rmin if y0 is None else int(y0)
    if y0 > rmin:
        raise ModelError(f"y0={y0} exceeds R_min={rmin}")
    if y0 < 0:
        raise ModelError("y0 must be nonnegative")
    b = ModelBuilder(model)
    sub = candidates.substation
    sub_cables = [c for c in candidates.cables if sub in c.id]
    other = [c for c in candidates.cables if sub not in c.id]
    for c in candidates.cables:
        b.var(_name("y", *c.id), "binary", priority=1)
    for c in sub_cables:
        b.var(_name("y0", *c.id), "binary", priority=1)
    for c in other:
        b.var(_name("y1", *c.id), "binary", priority=1)
    ix = b.index
    for c in candidates.cables:
        spare = _name("y0", *c.id) if sub in c.id else _name("y1", *c.id)
        b.con(
            [(ix[_name("x", *c.id)], 1.0), (ix[_name("y", *c.id)], -1.0), (ix[spare], -1.0)],
            EQ, 0.0, _name("kdct_link", *c.id), "kdct",
        )
    b.con([(ix[_name("y", *c.id)], 1.0) for c in sub_cables], EQ, 2 * rmin - y0, "kdct_subdeg", "kdct")
    b.con([(ix[_name("y", *c.id)], 1.0) for c in candidates.cables], EQ, len(net.turbines), "kdct_tree", "kdct")
    b.con([(ix[_name("y0", *c.id)], 1.0) for c in sub_cables], EQ, y0, "kdct_y0", "kdct")
    b.con([(ix[_name("y1", *c.id)], 1.0) for c in other], EQ, rmin - y0, "kdct_y1", "kdct")
    for t in net.turbines:
        b.con(
            [(ix[_name("x", *candidates.cables[k].id)], 1.0) for k in candidates.adjacency[t]],
            EQ, 2.0, _name("deg", t), "kdct",
        )
    b.meta["kdct"] = True
    b.meta["y0"] = y0
    return b.build()


def build_radial_model(
    net: NetworkParams,
    candidates: CandidateSet,
    crossings: CrossingSet,
    opts: ModelOptions = ModelOptions(),
) -> MilpModel:
    """Radial plan: |V^W| cables whose DC flows deliver every turbine to the substation."""
    thin = [t for t in net.turbines if not candidates.adjacency.get(t)]
    if thin:
        raise CandidateError(f"turbines without candidate cables: {thin}")
    b = ModelBuilder()
    _flow_part(b, net, candidates, crossings, opts)
    ix = b.index
    b.con([(ix[_name("x", *c.id)], 1.0) for c in candidates.cables], EQ, len(net.turbines), "tree", "tree")
    b.meta["topology"] = "radial"
    return b.build()


def columns(model: MilpModel, prefix: str) -> list[int]:
    """Column indices of a variable family, in model order."""
    tag = prefix + "["
    return [j for j, v in enumerate(model.variables) if v.name.startswith(tag)]


def objective_parts(model: MilpModel, values) -> dict[str, float]:
    """Split the objective value of a solution into investment, loss and shedding."""
    x = np.asarray(values)
    obj = np.asarray(model.objective)
    parts = {}
    for key, prefix in (("investment", "x"), ("loss", "loss"), ("shed", "shed")):
        cols = columns(model, prefix)
        parts[key] = float(obj[cols] @ x[cols]) if cols else 0.0
    return parts


def ring_solution_values(model: MilpModel, plan, net: NetworkParams, candidates: CandidateSet) -> np.ndarray:
    """Full column vector realizing a ring ``Plan`` in ``model``.

    Directions follow the route order, ``u`` accumulates along each route,
    flows come from the DC power flow and, when k-DCT columns exist, the first
    cable of each route is the one set aside (``y0``) with the rest forming the tree.
    """
    from .evaluation import dc_power_flow

    ix = model.var_index
    v = np.zeros(model.n_vars)
    sub = net.substation
    flow = dc_power_flow(plan, net)
    points = np.asarray(model.meta["tangent_points"])
    for cid, p in flow.flows.items():
        v[ix[_name("x", *cid)]] = 1.0
        v[ix[_name("P", *cid)]] = p
        v[ix[_name("loss", *cid)]] = float(pwl_square(p, points))
    for node, th in flow.theta.items():
        v[ix[_name("theta", node)]] = th
    v[ix[_name("psub", sub)]] = flow.p_sub
    kdct = "y[" + ",".join(candidates.cables[0].id) + "]" in ix
    y0_left = model.meta.get("y0", 0)
    for route in plan.routes:
        seq = [sub, *route, sub]
        acc = 0.0
        for a, bnode in zip(seq, seq[1:]):
            cid = candidates.get((a, bnode)).id
            v[ix[_name("xplus" if cid == (a, bnode) else "xminus", *cid)]] = 1.0
            if bnode != sub:
                acc += net.p_pu[bnode]
                v[ix[_name("u", bnode)]] = acc
        if kdct:
            first = candidates.get((sub, route[0])).id
            for a, bnode in zip(seq, seq[1:]):
                cid = candidates.get((a, bnode)).id
                v[ix[_name("y", *cid)]] = 1.0
            if y0_left > 0:
                v[ix[_name("y", *first)]] = 0.0
                v[ix[_name("y0", *first)]] = 1.0
                y0_left -= 1
            else:
                mid = candidates.get((route[0], route[1])).id
                v[ix[_name("y", *mid)]] = 0.0
                v[ix[_name("y1", *mid)]] = 1.0
    return v


def with_bounds(model: MilpModel, fixes: Mapping[str, tuple[float, float]]) -> MilpModel:
    """Copy of ``model`` with some column bounds replaced (by name)."""
    vs = list(model.variables)
    for name, (lo, hi) in fixes.items():
        j = model.var_index[name]
        vs[j] = replace(vs[j], lower=float(lo), upper=float(hi))
    return replace(model, variables=tuple(vs))
