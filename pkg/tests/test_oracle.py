import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from owfecs.crossing import build_crossing_set
from owfecs.evaluation import RING, Plan, dc_power_flow, route_cable_ids, verify_plan
from owfecs.farm import generate_candidates, to_per_unit
from owfecs.instances import make_layout
from owfecs.model import build_radial_model, build_ring_model
from owfecs.solver.bb import solve_bb
from owfecs.solver.oracle import (
    InstanceTooLargeError,
    OracleInfeasibleError,
    brute_force_oracle,
    brute_force_radial,
    ring_flows,
)

T5_RING_OPTIMUM = 33729324.1240495
T5_RADIAL_OPTIMUM = 23104392.7269


def _case(layout, rng, require_ring=True):
    cs = generate_candidates(layout, rng, require_ring=require_ring)
    return to_per_unit(layout), cs, build_crossing_set(cs)


def test_single_turbine_is_infeasible():
    net, cs, cr = _case(make_layout("one", (0, 0), [(1, 0, 5)]), 2.0, require_ring=False)
    with pytest.raises(OracleInfeasibleError):
        brute_force_oracle(net, cs, cr)


def test_equilateral_triangle_is_one_route():
    pts = [(math.cos(a), math.sin(a), 4) for a in (math.pi / 2, 7 * math.pi / 6, 11 * math.pi / 6)]
    net, cs, cr = _case(make_layout("tri", (0, 0), pts), 2.0)
    res = brute_force_oracle(net, cs, cr)
    assert len(res.plan.routes) == 1 and len(res.plan.routes[0]) == 3
    assert res.investment == pytest.approx((2 + math.sqrt(3) * 2) * 4e6)
    bb = solve_bb(build_ring_model(net, cs, cr))
    assert bb.objective == pytest.approx(res.objective, rel=1e-9)


def test_size_guard():
    pts = [(k % 5, 1 + k // 5, 1) for k in range(10)]
    net, cs, cr = _case(make_layout("big", (2, 0), pts), 1.5)
    with pytest.raises(InstanceTooLargeError):
        brute_force_oracle(net, cs, cr)


def test_t5_fixture(t5_case):
    res = brute_force_oracle(t5_case.net, t5_case.candidates, t5_case.crossings)
    assert res.objective == pytest.approx(T5_RING_OPTIMUM, rel=1e-12)
    assert sorted(res.plan.routes) == [("WT1", "WT2", "WT3"), ("WT4", "WT5")]
    assert verify_plan(res.plan, t5_case.net, t5_case.candidates, t5_case.crossings).passed
    rad = brute_force_radial(t5_case.net, t5_case.candidates, t5_case.crossings)
    assert rad.objective == pytest.approx(T5_RADIAL_OPTIMUM, rel=1e-9)
    assert rad.objective <= res.objective


def test_two_turbine_radial_picks_cheaper_tree():
    # chain Sub-1-2 is shorter than the star here
    net, cs, cr = _case(make_layout("line", (0, 0), [(1, 0, 5), (2, 0.2, 5)]), 3.0)
    res = brute_force_radial(net, cs, cr, loss_model="exact")
    assert set(res.plan.cable_ids) == {("Sub", "WT1"), ("WT1", "WT2")}
    sol = solve_bb(build_radial_model(net, cs, cr))
    pwl = brute_force_radial(net, cs, cr)
    assert sol.objective == pytest.approx(pwl.objective, rel=1e-9)


def test_exact_loss_not_below_pwl(t5_case):
    a = brute_force_oracle(t5_case.net, t5_case.candidates, t5_case.crossings, loss_model="exact")
    b = brute_force_oracle(t5_case.net, t5_case.candidates, t5_case.crossings, loss_model="pwl")
    assert a.objective >= b.objective


def test_unknown_loss_model(t5_case):
    with pytest.raises(ValueError):
        brute_force_oracle(t5_case.net, t5_case.candidates, t5_case.crossings, loss_model="cubic")


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.01, 0.1), min_size=2, max_size=6), st.data())
def test_ring_flows_match_network_solve(powers, data):
    # ring flows in closed form agree with the nodal solve of the same ring
    k = len(powers)
    b = data.draw(st.lists(st.floats(5.0, 500.0), min_size=k + 1, max_size=k + 1))
    flows, theta = ring_flows(powers, b)
    pts = [(math.cos(a), math.sin(a), 1.0) for a in np.linspace(0.3, 2.8, k)]
    layout = make_layout("ring", (0, 0), pts)
    cs = generate_candidates(layout, 10.0)
    route = tuple(f"WT{i}" for i in range(1, k + 1))
    plan = Plan.from_ids(RING, route_cable_ids(route, "Sub"), cs, [route])
    seq = ["Sub", *route, "Sub"]
    by_edge = {frozenset(e): bk for e, bk in zip(zip(seq, seq[1:]), b)}
    cables = [type(c)(c.i, c.j, c.length_km, c.cost, c.r_pu, by_edge[frozenset(c.id)], c.capacity_pu) for c in plan.cables]
    net = to_per_unit(layout)
    net = type(net)(net.layout, dict(zip(route, powers)), net.capacity_pu, net.s_base_mva)
    fs = dc_power_flow(plan, net, cables)
    for (a, bnode), f in zip(zip(seq, seq[1:]), flows):
        key = (a, bnode) if (a, bnode) in fs.flows else (bnode, a)
        sign = 1.0 if key == (a, bnode) else -1.0
        assert sign * fs.flows[key] == pytest.approx(f, abs=1e-12)
    for t, th in zip(route, theta):
        assert fs.theta[t] == pytest.approx(th, abs=1e-12)
