"""Physical and economic description of a wind farm and its candidate cables."""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

SUBSTATION = "substation"
TURBINE = "turbine"


class LayoutError(ValueError):
    """Raised when a layout document is malformed or violates an invariant."""


class CandidateError(ValueError):
    """Raised when the candidate cable graph cannot support a ring plan."""


def natural_key(node_id: str):
    """Sort key that orders ``WT2`` before ``WT10``."""
    return tuple(int(t) if t.isdigit() else t for t in re.split(r"(\d+)", node_id))


@dataclass(frozen=True)
class Node:
    id: str
    kind: str
    x_km: float
    y_km: float
    p_mw: float = 0.0

    @property
    def xy(self) -> tuple[float, float]:
        return (self.x_km, self.y_km)


@dataclass(frozen=True)
class CableParams:
    capacity_mw: float
    cost_per_km: float
    r_ohm_per_km: float
    x_ohm_per_km: float
    voltage_kv: float
    s_base_mva: float = 100.0

    @property
    def z_base(self) -> float:
        return self.voltage_kv**2 / self.s_base_mva


@dataclass(frozen=True)
class EconomicParams:
    planning_years: float = 20.0
    full_load_hours: float = 4000.0
    energy_price_per_mwh: float = 850.0
    failure_rate_per_km_yr: float = 0.0045
    mttr_hours: float = 1440.0
    big_m: float = 1e7

    @property
    def eta(self) -> float:
        """Hours over which one MW of loss is paid for during the planning horizon."""
        return self.planning_years * self.full_load_hours


@dataclass(frozen=True)
class Layout:
    name: str
    nodes: tuple[Node, ...]
    cable: CableParams
    economics: EconomicParams

    def __post_init__(self):
        _validate(self)

    @property
    def substation(self) -> Node:
        return next(n for n in self.nodes if n.kind == SUBSTATION)

    @property
    def turbines(self) -> tuple[Node, ...]:
        """Turbines in canonical (natural id) order."""
        return tuple(
            sorted((n for n in self.nodes if n.kind == TURBINE), key=lambda n: natural_key(n.id))
        )

    @property
    def node_order(self) -> tuple[str, ...]:
        """Canonical node order: the substation first, then turbines by id."""
        return (self.substation.id,) + tuple(t.id for t in self.turbines)

    def node(self, node_id: str) -> Node:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    @property
    def total_power_mw(self) -> float:
        return sum(t.p_mw for t in self.turbines)

    def with_nodes(self, nodes: Iterable[Node]) -> "Layout":
        return Layout(self.name, tuple(nodes), self.cable, self.economics)


def _validate(layout: Layout) -> None:
    ids = [n.id for n in layout.nodes]
    if len(set(ids)) != len(ids):
        raise LayoutError("node ids must be unique")
    subs = [n for n in layout.nodes if n.kind == SUBSTATION]
    if len(subs) == 0:
        raise LayoutError("layout needs one substation")
    if len(subs) > 1:
        raise LayoutError("multiple substations unsupported")
    for n in layout.nodes:
        if n.kind not in (SUBSTATION, TURBINE):
            raise LayoutError(f"unknown node kind {n.kind!r}")
        if not (math.isfinite(n.x_km) and math.isfinite(n.y_km)):
            raise LayoutError(f"node {n.id}: coordinates must be finite")
        if not math.isfinite(n.p_mw) or n.p_mw < 0:
            raise LayoutError(f"node {n.id}: p_mw must be nonnegative")
        if n.kind == SUBSTATION and n.p_mw != 0:
            raise LayoutError("substation cannot generate power")
    seen = {}
    for n in layout.nodes:
        other = seen.setdefault(n.xy, n.id)
        if other != n.id:
            raise LayoutError(f"nodes {other} and {n.id} share a position")
    c = layout.cable
    for name in ("capacity_mw", "cost_per_km", "r_ohm_per_km", "x_ohm_per_km", "voltage_kv", "s_base_mva"):
        v = getattr(c, name)
        if not (math.isfinite(v) and v > 0):
            raise LayoutError(f"cable {name} must be strictly positive")
    e = layout.economics
    for name in (
        "planning_years",
        "full_load_hours",
        "energy_price_per_mwh",
        "failure_rate_per_km_yr",
        "mttr_hours",
        "big_m",
    ):
        v = getattr(e, name)
        if not (math.isfinite(v) and v >= 0):
            raise LayoutError(f"economics {name} must be nonnegative")
    for t in layout.nodes:
        if t.kind == TURBINE and t.p_mw > c.capacity_mw:
            raise LayoutError(f"turbine power exceeds cable capacity ({t.id})")


_TOP_KEYS = {"name", "s_base_mva", "substations", "turbines", "cable", "economics"}
_SUB_KEYS = {"id", "x_km", "y_km"}
_WT_KEYS = {"id", "x_km", "y_km", "p_mw"}
_CABLE_KEYS = {"capacity_mw", "cost_per_km", "r_ohm_per_km", "x_ohm_per_km", "voltage_kv"}
_ECON_KEYS = {
    "planning_years",
    "full_load_hours",
    "energy_price_per_mwh",
    "failure_rate_per_km_yr",
    "mttr_hours",
    "big_m",
}


def _check_keys(obj, allowed: set, required: set, where: str) -> None:
    if not isinstance(obj, Mapping):
        raise LayoutError(f"{where}: expected an object")
    unknown = set(obj) - allowed
    if unknown:
        raise LayoutError(f"{where}: unknown fields {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise LayoutError(f"{where}: missing fields {sorted(missing)}")


def _num(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise LayoutError(f"{where}: expected a number")
    return float(v)


def layout_from_dict(doc: Mapping) -> Layout:
    _check_keys(doc, _TOP_KEYS, {"substations", "turbines", "cable"}, "layout")
    s_base = _num(doc.get("s_base_mva", 100.0), "s_base_mva")
    nodes = []
    subs = doc["substations"]
    wts = doc["turbines"]
    if not isinstance(subs, list) or not isinstance(wts, list):
        raise LayoutError("substations and turbines must be lists")
    for k, s in enumerate(subs):
        _check_keys(s, _SUB_KEYS, _SUB_KEYS, f"substations[{k}]")
        nodes.append(Node(str(s["id"]), SUBSTATION, _num(s["x_km"], "x_km"), _num(s["y_km"], "y_km")))
    for k, t in enumerate(wts):
        _check_keys(t, _WT_KEYS, _WT_KEYS, f"turbines[{k}]")
        nodes.append(
            Node(
                str(t["id"]),
                TURBINE,
                _num(t["x_km"], "x_km"),
                _num(t["y_km"], "y_km"),
                _num(t["p_mw"], "p_mw"),
            )
        )
    if not wts:
        raise LayoutError("layout needs at least one turbine")
    _check_keys(doc["cable"], _CABLE_KEYS, _CABLE_KEYS, "cable")
    cable = CableParams(**{k: _num(v, k) for k, v in doc["cable"].items()}, s_base_mva=s_base)
    econ_doc = doc.get("economics", {})
    _check_keys(econ_doc, _ECON_KEYS, set(), "economics")
    econ = EconomicParams(**{k: _num(v, k) for k, v in econ_doc.items()})
    return Layout(str(doc.get("name", "")), tuple(nodes), cable, econ)


def load_layout(source: IO[str] | str) -> Layout:
    """Parse and validate a JSON layout document from a stream or a string."""
    text = source if isinstance(source, str) else source.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise LayoutError(f"malformed layout document: {exc}") from exc
    return layout_from_dict(doc)


def layout_to_dict(layout: Layout) -> dict:
    c = layout.cable
    e = layout.economics
    return {
        "name": layout.name,
        "s_base_mva": c.s_base_mva,
        "substations": [{"id": s.id, "x_km": s.x_km, "y_km": s.y_km} for s in [layout.substation]],
        "turbines": [
            {"id": t.id, "x_km": t.x_km, "y_km": t.y_km, "p_mw": t.p_mw} for t in layout.turbines
        ],
        "cable": {
            "capacity_mw": c.capacity_mw,
            "cost_per_km": c.cost_per_km,
            "r_ohm_per_km": c.r_ohm_per_km,
            "x_ohm_per_km": c.x_ohm_per_km,
            "voltage_kv": c.voltage_kv,
        },
        "economics": {
            "planning_years": e.planning_years,
            "full_load_hours": e.full_load_hours,
            "energy_price_per_mwh": e.energy_price_per_mwh,
            "failure_rate_per_km_yr": e.failure_rate_per_km_yr,
            "mttr_hours": e.mttr_hours,
            "big_m": e.big_m,
        },
    }


# --------------------------------------------------------------------------
# candidate cables


@dataclass(frozen=True)
class CandidateCable:
    i: str
    j: str
    length_km: float
    cost: float
    r_pu: float
    b_pu: float
    capacity_pu: float

    @property
    def id(self) -> tuple[str, str]:
        return (self.i, self.j)

    def other(self, node_id: str) -> str:
        return self.j if node_id == self.i else self.i


@dataclass(frozen=True)
class CandidateSet:
    cables: tuple[CandidateCable, ...]
    coords: Mapping[str, tuple[float, float]]
    substation: str
    node_order: tuple[str, ...]
    adjacency: Mapping[str, tuple[int, ...]] = field(default_factory=dict)

    def __len__(self):
        return len(self.cables)

    def index(self, cable_id: Sequence[str]) -> int:
        return self._lookup[canonical_pair(tuple(cable_id), self.node_order)]

    def __contains__(self, cable_id) -> bool:
        try:
            self.index(cable_id)
        except KeyError:
            return False
        return True

    def get(self, cable_id) -> CandidateCable:
        return self.cables[self.index(cable_id)]

    @property
    def _lookup(self) -> dict:
        lk = self.__dict__.get("_lk")
        if lk is None:
            lk = {c.id: k for k, c in enumerate(self.cables)}
            object.__setattr__(self, "_lk", lk)
        return lk

    @property
    def substation_cables(self) -> tuple[int, ...]:
        """Indices of cables incident to the substation (the set L^Sub)."""
        return self.adjacency[self.substation]

    @property
    def turbines(self) -> tuple[str, ...]:
        return self.node_order[1:]


def canonical_pair(pair: tuple[str, str], node_order: Sequence[str]) -> tuple[str, str]:
    a, b = pair
    rank = {nid: k for k, nid in enumerate(node_order)}
    if a == b:
        raise KeyError(pair)
    return (a, b) if rank[a] < rank[b] else (b, a)


def make_cable(layout: Layout, a: Node, b: Node) -> CandidateCable:
    """Derive the per-unit record for the cable between two nodes."""
    rank = {nid: k for k, nid in enumerate(layout.node_order)}
    if rank[a.id] > rank[b.id]:
        a, b = b, a
    c = layout.cable
    length = math.hypot(a.x_km - b.x_km, a.y_km - b.y_km)
    zb = c.z_base
    return CandidateCable(
        i=a.id,
        j=b.id,
        length_km=length,
        cost=length * c.cost_per_km,
        r_pu=c.r_ohm_per_km * length / zb,
        b_pu=1.0 / (c.x_ohm_per_km * length / zb),
        capacity_pu=c.capacity_mw / c.s_base_mva,
    )


def candidate_set_from_cables(layout: Layout, cables: Iterable[CandidateCable]) -> CandidateSet:
    order = layout.node_order
    rank = {nid: k for k, nid in enumerate(order)}
    cables = sorted(set(cables), key=lambda c: (rank[c.i], rank[c.j]))
    adjacency: dict[str, list[int]] = {nid: [] for nid in order}
    for k, c in enumerate(cables):
        adjacency[c.i].append(k)
        adjacency[c.j].append(k)
    return CandidateSet(
        cables=tuple(cables),
        coords={n.id: n.xy for n in layout.nodes},
        substation=layout.substation.id,
        node_order=order,
        adjacency={k: tuple(v) for k, v in adjacency.items()},
    )


def detect_spacing(layout: Layout, tol: float = 1e-6) -> tuple[float, float] | None:
    """Return (column spacing, row spacing) when turbines sit on a regular grid."""
    xs = np.array([t.x_km for t in layout.turbines])
    ys = np.array([t.y_km for t in layout.turbines])

    def step(v):
        u = np.unique(np.round(v / tol) * tol)
        if u.size < 2:
            return None
        d = np.diff(u)
        if np.ptp(d) > 1e3 * tol:
            return None
        return float(d.mean())

    dx, dy = step(xs), step(ys)
    if dx is None and dy is None:
        return None
    return (dx or dy, dy or dx)


def default_max_range(layout: Layout) -> float:
    spacing = detect_spacing(layout)
    if spacing is None:
        raise CandidateError("cannot detect grid spacing; pass max_range_km explicitly")
    return 2.1 * max(spacing)


def generate_candidates(
    layout: Layout,
    max_range_km: float | None = None,
    substation_whitelist: Sequence[str] | None = None,
    require_ring: bool = True,
) -> CandidateSet:
    """List every cable whose length is within ``max_range_km`` (boundary included).

    With ``substation_whitelist`` the substation is linked to exactly the listed
    turbines regardless of distance.
    """
    if max_range_km is None:
        max_range_km = default_max_range(layout)
    if not max_range_km > 0:
        raise CandidateError("max_range_km must be positive")
    sub = layout.substation
    turbines = layout.turbines
    cables = []
    if substation_whitelist is not None:
        known = {t.id for t in turbines}
        for tid in substation_whitelist:
            if tid not in known:
                raise CandidateError(f"whitelisted turbine {tid!r} not in layout")
            cables.append(make_cable(layout, sub, layout.node(tid)))
        pool = list(turbines)
    else:
        pool = [sub, *turbines]
    for ia in range(len(pool)):
        for ib in range(ia + 1, len(pool)):
            a, b = pool[ia], pool[ib]
            if math.hypot(a.x_km - b.x_km, a.y_km - b.y_km) <= max_range_km:
                cables.append(make_cable(layout, a, b))
    cs = candidate_set_from_cables(layout, cables)
    if require_ring:
        thin = [t.id for t in turbines if len(cs.adjacency[t.id]) < 2]
        if thin:
            raise CandidateError(f"turbines with fewer than 2 candidate cables: {thin}")
    return cs


# --------------------------------------------------------------------------
# per-unit data


@dataclass(frozen=True)
class NetworkParams:
    layout: Layout
    p_pu: Mapping[str, float]
    capacity_pu: float
    s_base_mva: float

    @property
    def economics(self) -> EconomicParams:
        return self.layout.economics

    @property
    def eta(self) -> float:
        return self.layout.economics.eta

    @property
    def substation(self) -> str:
        return self.layout.substation.id

    @property
    def turbines(self) -> tuple[str, ...]:
        return tuple(t.id for t in self.layout.turbines)

    @property
    def total_pu(self) -> float:
        return sum(self.p_pu.values())

    @property
    def loss_price(self) -> float:
        """Lifetime currency cost of one per-unit of ``r * P**2`` loss."""
        e = self.economics
        return self.eta * self.s_base_mva * e.energy_price_per_mwh

    @property
    def shed_price(self) -> float:
        """Objective weight per per-unit of curtailed power."""
        return self.economics.big_m * self.s_base_mva

    def to_mw(self, value_pu: float) -> float:
        return value_pu * self.s_base_mva


def to_per_unit(layout: Layout) -> NetworkParams:
    s = layout.cable.s_base_mva
    return NetworkParams(
        layout=layout,
        p_pu={t.id: t.p_mw / s for t in layout.turbines},
        capacity_pu=layout.cable.capacity_mw / s,
        s_base_mva=s,
    )


def r_min(layout: Layout) -> int:
    """Minimum number of routes able to carry the whole farm output."""
    total = sum((Fraction(t.p_mw) for t in layout.turbines), Fraction(0))
    cap = Fraction(layout.cable.capacity_mw)
    if any(Fraction(t.p_mw) > cap for t in layout.turbines):
        raise LayoutError("turbine power exceeds cable capacity")
    return math.ceil(total / cap)
