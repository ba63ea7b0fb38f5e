"""Collector system planning for offshore wind farms with double-sided rings."""

from .crossing import CrossingSet, build_crossing_set, segments_cross, side_sign
from .evaluation import (
    CostReport,
    Plan,
    VerificationReport,
    cost_report,
    dc_power_flow,
    eeng_cost,
    loss_cost,
    plan_objective,
    verify_plan,
)
from .export import export_model, parse_model
from .farm import (
    CableParams,
    CandidateSet,
    EconomicParams,
    Layout,
    NetworkParams,
    Node,
    generate_candidates,
    load_layout,
    r_min,
    to_per_unit,
)
from .heuristics import cws_route, sweep_cws_plan, sweep_partition, sweep_sensitivity
from .model import ModelOptions, add_kdct, build_radial_model, build_ring_model
from .report import render_svg, write_report
from .solver.bb import MilpSolution, SolveLimits, extract_plan, solve_bb
from .solver.lp import solve_lp
from .solver.oracle import brute_force_oracle, brute_force_radial

__version__ = "0.1.0"

__all__ = [
    "CableParams",
    "CandidateSet",
    "CostReport",
    "CrossingSet",
    "EconomicParams",
    "Layout",
    "MilpSolution",
    "ModelOptions",
    "NetworkParams",
    "Node",
    "Plan",
    "SolveLimits",
    "VerificationReport",
    "add_kdct",
    "brute_force_oracle",
    "brute_force_radial",
    "build_crossing_set",
    "build_radial_model",
    "build_ring_model",
    "cost_report",
    "cws_route",
    "dc_power_flow",
    "eeng_cost",
    "export_model",
    "extract_plan",
    "generate_candidates",
    "load_layout",
    "loss_cost",
    "parse_model",
    "plan_objective",
    "r_min",
    "render_svg",
    "segments_cross",
    "side_sign",
    "solve_bb",
    "solve_lp",
    "sweep_cws_plan",
    "sweep_partition",
    "sweep_sensitivity",
    "to_per_unit",
    "verify_plan",
    "write_report",
]
