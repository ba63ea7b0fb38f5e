import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from owfecs.crossing import build_crossing_set
from owfecs.evaluation import RING, Plan, route_cable_ids
from owfecs.farm import CandidateError, generate_candidates, r_min, to_per_unit
from owfecs.instances import jittered_grid, make_layout
from owfecs.model import (
    BINARY,
    CONTINUOUS,
    ModelError,
    ModelOptions,
    add_kdct,
    build_radial_model,
    build_ring_model,
    pwl_square,
    ring_solution_values,
    tangent_points,
    tangent_spacing,
    with_bounds,
)
from owfecs.solver.lp import LinearProgram, solve_lp


def ring_plan(case, routes):
    sub = case.net.substation
    ids = [p for r in routes for p in route_cable_ids(r, sub)]
    return Plan.from_ids(RING, ids, case.candidates, routes)


@pytest.mark.parametrize("kdct", [False, True])
def test_dimensions(t5_case, kdct):
    m = build_ring_model(t5_case.net, t5_case.candidates, t5_case.crossings, ModelOptions(enable_kdct=kdct))
    L = len(t5_case.candidates)
    W = len(t5_case.net.turbines)
    assert m.count(BINARY) == 3 * L + (2 * L if kdct else 0)
    # P, loss, u, shed, theta over all nodes and the substation intake
    assert m.count(CONTINUOUS) == 2 * L + 2 * W + (W + 1) + 1
    assert all(v.lower == 0 and v.upper == 1 for v in m.variables if v.kind == BINARY)
    assert all(0 <= j < m.n_vars for con in m.constraints for j, _ in con.coeffs)


def test_cac_rows(t5_case):
    net, cs, cr = t5_case.net, t5_case.candidates, t5_case.crossings
    assert len(cr) > 0
    on = build_ring_model(net, cs, cr, ModelOptions(enable_cac=True))
    off = build_ring_model(net, cs, cr, ModelOptions(enable_cac=False))
    assert len(on.family("cac")) == len(cr)
    assert on.n_constraints - off.n_constraints == len(cr)
    assert [c for c in on.constraints if c.family != "cac"] == list(off.constraints)
    assert on.variables == off.variables and on.objective == off.objective
    for con in on.family("cac"):
        assert con.sense == "<=" and con.rhs == 1.0 and sorted(v for _, v in con.coeffs) == [1.0, 1.0]


def _chain():
    layout = make_layout("chain", (0, 0), [(1, 0, 5), (1, 1, 5), (0, 1, 5)])
    cs = generate_candidates(layout, 1.1)
    return layout, to_per_unit(layout), cs, build_crossing_set(cs)


def test_mtz_accumulates_along_route():
    layout, net, cs, cr = _chain()
    m = build_ring_model(net, cs, cr, ModelOptions(enable_kdct=False))
    plan = Plan.from_ids(RING, route_cable_ids(("WT1", "WT2", "WT3"), "Sub"), cs, [("WT1", "WT2", "WT3")])
    v = ring_solution_values(m, plan, net, cs)
    assert v[m.col("xplus[Sub,WT1]")] == 1 and v[m.col("xplus[WT1,WT2]")] == 1 and v[m.col("xplus[WT2,WT3]")] == 1
    p = net.p_pu["WT1"]
    assert v[m.col("u[WT1]")] == pytest.approx(p)
    assert v[m.col("u[WT3]")] == pytest.approx(3 * p)
    assert m.max_violation(v) <= 1e-9


def test_mtz_rejects_subtour():
    layout = make_layout("sub", (0, 0), [(1, 0, 5), (2, 0, 5), (1.5, 0.8, 5)])
    cs = generate_candidates(layout, 1.2)
    net = to_per_unit(layout)
    m = build_ring_model(net, cs, build_crossing_set(cs), ModelOptions(enable_kdct=False))
    on = {"xplus[WT1,WT2]", "xplus[WT2,WT3]", "xminus[WT1,WT3]"}
    fixes = {v.name: ((1, 1) if v.name in on else (0, 0)) for v in m.variables if v.kind == BINARY}
    sol = solve_lp(LinearProgram.from_model(with_bounds(m, fixes)))
    assert sol.status == "Infeasible"


def test_turbine_without_two_candidates():
    layout = make_layout("thin", (0, 0), [(1, 0, 5), (5, 0, 5), (1, 1, 5)])
    cs = generate_candidates(layout, 1.5, require_ring=False)
    with pytest.raises(CandidateError):
        build_ring_model(to_per_unit(layout), cs, build_crossing_set(cs))


@pytest.mark.parametrize("bad", [dict(pwl_tangents=1), dict(y0=-1), dict(theta_bound=0)])
def test_bad_options(bad):
    with pytest.raises(ModelError):
        ModelOptions(**bad)


def test_y0_above_r_min(t5_case):
    with pytest.raises(ModelError, match="exceeds R_min"):
        build_ring_model(t5_case.net, t5_case.candidates, t5_case.crossings, ModelOptions(y0=3))


def test_kdct_substation_degree_three_routes():
    layout = jittered_grid(8, 1)
    assert r_min(layout) == 3
    net = to_per_unit(layout)
    cs = generate_candidates(layout, 1.6)
    m = build_ring_model(net, cs, build_crossing_set(cs), ModelOptions(y0=2))
    rows = {c.name: c for c in m.family("kdct")}
    assert rows["kdct_subdeg"].rhs == 4
    assert rows["kdct_y1"].rhs == 1


def test_default_y0_forces_no_y1(t5_case):
    m = build_ring_model(t5_case.net, t5_case.candidates, t5_case.crossings)
    rows = {c.name: c for c in m.family("kdct")}
    assert m.meta["y0"] == r_min(t5_case.layout)
    assert rows["kdct_y1"].rhs == 0
    assert all(v.name.split("[")[0] != "y0" or "Sub" in v.name for v in m.variables)
    assert all(v.name.split("[")[0] != "y1" or "Sub" not in v.name for v in m.variables)


@pytest.mark.parametrize("y0", [0, 1, 2])
def test_ring_plan_stays_feasible_with_kdct(t5_case, y0):
    routes = [("WT1", "WT2", "WT3"), ("WT4", "WT5")]
    plan = ring_plan(t5_case, routes)
    m = build_ring_model(t5_case.net, t5_case.candidates, t5_case.crossings, ModelOptions(y0=y0))
    v = ring_solution_values(m, plan, t5_case.net, t5_case.candidates)
    assert m.max_violation(v) <= 1e-9


def test_kdct_root_bound_not_lower(t5_case):
    args = (t5_case.net, t5_case.candidates, t5_case.crossings)
    plain = build_ring_model(*args, ModelOptions(enable_kdct=False))
    strong = add_kdct(plain, t5_case.net, t5_case.candidates)
    a = solve_lp(LinearProgram.from_model(plain))
    b = solve_lp(LinearProgram.from_model(strong))
    assert a.optimal and b.optimal
    assert b.objective >= a.objective - 1e-9 * abs(a.objective)


def test_all_shed_is_infeasible(t5_case):
    m = build_ring_model(t5_case.net, t5_case.candidates, t5_case.crossings, ModelOptions(enable_kdct=False))
    fixes = {v.name: (0, 0) for v in m.variables if v.kind == BINARY}
    fixes.update({f"shed[{t}]": (p, p) for t, p in t5_case.net.p_pu.items()})
    assert solve_lp(LinearProgram.from_model(with_bounds(m, fixes))).status == "Infeasible"


def test_radial_model_has_tree_row(t5_case):
    m = build_radial_model(t5_case.net, t5_case.candidates, t5_case.crossings)
    (row,) = m.family("tree")
    assert row.rhs == len(t5_case.net.turbines)
    assert not m.family("mtz") and m.meta["topology"] == "radial"


@settings(max_examples=200, deadline=None)
@given(st.floats(0.01, 1.0), st.integers(2, 15), st.floats(-1.0, 1.0))
def test_tangent_gap_bounded(cap, k, frac):
    p = frac * cap
    pts = tangent_points(cap, k)
    under = float(pwl_square(p, pts))
    delta = tangent_spacing(cap, k)
    assert 0.0 <= p * p - under <= delta**2 / 4 + 1e-15


def test_tangent_points_are_exact_at_knots():
    pts = tangent_points(0.15, 9)
    assert np.allclose(pwl_square(pts, pts), pts**2)
