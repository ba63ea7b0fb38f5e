import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from owfecs.evaluation import (
    RADIAL,
    RING,
    CostReport,
    DisconnectedPlanError,
    FlowState,
    Plan,
    balance_residuals,
    cost_report,
    dc_power_flow,
    eeng_cost,
    loss_cost,
    route_cable_ids,
    verify_plan,
)
from owfecs.farm import CandidateCable, EconomicParams, generate_candidates, to_per_unit
from owfecs.instances import jittered_grid, make_layout
from owfecs.crossing import build_crossing_set

RELIABILITY_ECON = EconomicParams(planning_years=20, energy_price_per_mwh=850, failure_rate_per_km_yr=0.0045, mttr_hours=1440)


def hand_ring(p1=3.0, p2=1.0, b=1.0, r=0.01):
    layout = make_layout("hand", (0, 0), [(1, 0, 5), (1, 1, 5)])
    net = to_per_unit(layout)
    net = type(net)(layout, {"WT1": p1, "WT2": p2}, 10.0, net.s_base_mva)
    cables = tuple(CandidateCable(i, j, 1.0, 1.0, r, b, 10.0) for i, j in (("Sub", "WT1"), ("Sub", "WT2"), ("WT1", "WT2")))
    return net, Plan(RING, cables, (("WT1", "WT2"),))


def test_hand_solved_ring():
    net, plan = hand_ring()
    fs = dc_power_flow(plan, net)
    assert fs.theta["Sub"] == 0.0
    assert fs.theta["WT1"] == pytest.approx(7 / 3, abs=1e-12)
    assert fs.theta["WT2"] == pytest.approx(5 / 3, abs=1e-12)
    assert -fs.flows[("Sub", "WT1")] == pytest.approx(7 / 3, abs=1e-12)
    assert fs.flows[("WT1", "WT2")] == pytest.approx(2 / 3, abs=1e-12)
    assert -fs.flows[("Sub", "WT2")] == pytest.approx(5 / 3, abs=1e-12)
    assert max(map(abs, balance_residuals(fs, net).values())) <= 1e-12


def test_symmetric_ring_has_no_cross_flow():
    net, plan = hand_ring(p1=2.0, p2=2.0)
    fs = dc_power_flow(plan, net)
    assert fs.flows[("WT1", "WT2")] == pytest.approx(0.0, abs=1e-12)
    assert -fs.flows[("Sub", "WT1")] == pytest.approx(2.0)


def test_hand_loss():
    net, plan = hand_ring()
    lc = loss_cost(dc_power_flow(plan, net), net)
    assert round(lc.loss_pu, 6) == pytest.approx(0.086667, abs=1e-6)
    assert lc.loss_pu == pytest.approx(0.01 * ((7 / 3) ** 2 + (2 / 3) ** 2 + (5 / 3) ** 2), rel=1e-12)
    assert lc.cost == pytest.approx(net.loss_price * lc.loss_pu)
    assert lc.loss_rate == pytest.approx(100 * lc.loss_pu / 4.0)


def test_loss_homogeneity():
    net, plan = hand_ring()
    a = dc_power_flow(plan, net).loss_pu
    net2 = type(net)(net.layout, {k: 2 * v for k, v in net.p_pu.items()}, 10.0, net.s_base_mva)
    assert dc_power_flow(plan, net2).loss_pu == pytest.approx(4 * a, rel=1e-12)
    net0 = type(net)(net.layout, {k: 0.0 for k in net.p_pu}, 10.0, net.s_base_mva)
    assert dc_power_flow(plan, net0).loss_pu == 0.0


def test_radial_chain_flows():
    layout = make_layout("chain", (0, 0), [(1, 0, 5), (2, 0, 3)])
    cs = generate_candidates(layout, 1.0, require_ring=False)
    net = to_per_unit(layout)
    plan = Plan.from_ids(RADIAL, [("Sub", "WT1"), ("WT1", "WT2")], cs)
    fs = dc_power_flow(plan, net)
    assert -fs.flows[("Sub", "WT1")] == pytest.approx(0.08)
    assert fs.flows[("WT1", "WT2")] == pytest.approx(-0.03)


def test_disconnected_plan():
    net, plan = hand_ring()
    with pytest.raises(DisconnectedPlanError):
        dc_power_flow(plan, net, plan.cables[:1])


def test_susceptance_scaling():
    net, plan = hand_ring(b=1.0)
    _, plan3 = hand_ring(b=3.0)
    a, b = dc_power_flow(plan, net), dc_power_flow(plan3, net)
    for k in a.flows:
        assert b.flows[k] == pytest.approx(a.flows[k], rel=1e-12)
    for k in a.theta:
        assert b.theta[k] == pytest.approx(a.theta[k] / 3, abs=1e-12)


def _single_cable(length_km=10.0, mw=50.0):
    c = CandidateCable("Sub", "WT1", length_km, 0.0, 0.0, 1.0, 1.0)
    plan = Plan(RADIAL, (c,))
    flow = FlowState({c.id: -mw / 100.0}, {"Sub": 0.0, "WT1": mw / 100.0}, {"WT1": 0.0}, mw / 100.0, (c,), 100.0)
    return plan, flow


def test_eeng_single_cable():
    plan, flow = _single_cable()
    assert eeng_cost(plan, flow, RELIABILITY_ECON) == pytest.approx(55_080_000, rel=1e-12)
    assert eeng_cost(Plan(RING, plan.cables), flow, RELIABILITY_ECON) == 0.0
    assert eeng_cost(plan, flow, EconomicParams(failure_rate_per_km_yr=0.0)) == 0.0


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(["failure_rate_per_km_yr", "mttr_hours", "energy_price_per_mwh", "planning_years"]), st.floats(0.01, 100))
def test_eeng_is_linear_in_each_parameter(param, alpha):
    plan, flow = _single_cable()
    base = eeng_cost(plan, flow, RELIABILITY_ECON)
    scaled = EconomicParams(**{**RELIABILITY_ECON.__dict__, param: getattr(RELIABILITY_ECON, param) * alpha})
    assert eeng_cost(plan, flow, scaled) == pytest.approx(alpha * base, rel=1e-12)


def test_verify_t5_ring(t5_case):
    routes = [("WT1", "WT2", "WT3"), ("WT4", "WT5")]
    plan = Plan.from_ids(RING, [p for r in routes for p in route_cable_ids(r, "Sub")], t5_case.candidates, routes)
    rep = verify_plan(plan, t5_case.net, t5_case.candidates, t5_case.crossings)
    assert rep.passed, rep.to_json()
    assert {c.name for c in rep.checks} == {"candidates", "degree", "route_capacity", "no_crossing", "base_flow", "n_minus_1"}


def test_verify_overloaded_route(t5_case):
    routes = [("WT1", "WT2", "WT3", "WT5", "WT4")]
    plan = Plan.from_ids(RING, [p for r in routes for p in route_cable_ids(r, "Sub")], t5_case.candidates, routes)
    rep = verify_plan(plan, t5_case.net, t5_case.candidates, t5_case.crossings)
    assert not rep["route_capacity"].passed
    assert not rep["n_minus_1"].passed


def test_verify_radial_fails_n_minus_1(t5_case):
    ids = [("Sub", "WT1"), ("WT1", "WT2"), ("Sub", "WT3"), ("Sub", "WT4"), ("WT4", "WT5")]
    plan = Plan.from_ids(RADIAL, ids, t5_case.candidates)
    rep = verify_plan(plan, t5_case.net, t5_case.candidates, t5_case.crossings)
    assert rep["degree"].passed and rep["base_flow"].passed
    assert not rep["n_minus_1"].passed and "disconnects" in rep["n_minus_1"].detail


def test_verify_names_crossing_pair():
    layout = make_layout("x", (0, 0), [(2, 2, 5), (0, 2, 5), (2, 0, 5)])
    cs = generate_candidates(layout, 3.0)
    cr = build_crossing_set(cs)
    routes = [("WT1", "WT2", "WT3")]  # Sub-WT1 and WT2-WT3 cross
    plan = Plan.from_ids(RING, [p for r in routes for p in route_cable_ids(r, "Sub")], cs, routes)
    rep = verify_plan(plan, to_per_unit(layout), cs, cr)
    check = rep["no_crossing"]
    assert not check.passed
    assert check.items == ((("Sub", "WT1"), ("WT2", "WT3")),)
    assert "WT2" in check.detail


def test_verify_foreign_cable(t5_case):
    routes = [("WT1", "WT5"), ("WT2", "WT3", "WT4")]
    ids = [p for r in routes for p in route_cable_ids(r, "Sub")]
    cs = generate_candidates(t5_case.layout, 1.5)
    plan = Plan.from_ids(RING, ids, cs, routes, layout=t5_case.layout)
    rep = verify_plan(plan, t5_case.net, cs, build_crossing_set(cs))
    assert not rep["candidates"].passed


def test_cost_report_totals(t5_case):
    routes = [("WT1", "WT2", "WT3"), ("WT4", "WT5")]
    plan = Plan.from_ids(RING, [p for r in routes for p in route_cable_ids(r, "Sub")], t5_case.candidates, routes)
    rep = cost_report(plan, t5_case.net, gap=0.0)
    assert rep.total == pytest.approx(rep.investment + rep.operation + rep.eeng)
    assert rep.eeng == 0.0 and rep.gap == 0.0
    assert CostReport.from_json(rep.to_json()) == rep


def test_plan_json_round_trip(t5_case):
    routes = [("WT1", "WT2", "WT3"), ("WT4", "WT5")]
    plan = Plan.from_ids(RING, [p for r in routes for p in route_cable_ids(r, "Sub")], t5_case.candidates, routes)
    assert Plan.from_json(plan.to_json(), t5_case.candidates) == plan


@pytest.mark.parametrize("seed", range(6))
def test_balance_residuals_on_random_trees(seed):
    rng = np.random.default_rng(seed)
    layout = jittered_grid(7, seed + 10)
    cs = generate_candidates(layout, 3.0)
    net = to_per_unit(layout)
    # random spanning tree plus a few extra cables
    order = list(layout.node_order)
    ids = [(order[k], order[int(rng.integers(0, k))]) for k in range(1, len(order))]
    extra = [cs.cables[int(k)].id for k in rng.integers(0, len(cs), 3)]
    unique = {frozenset(p): p for p in ids + extra}
    plan = Plan.from_ids(RADIAL, unique.values(), cs, layout=layout)
    fs = dc_power_flow(plan, net)
    assert max(map(abs, balance_residuals(fs, net).values())) <= 1e-9
