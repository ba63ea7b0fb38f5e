"""Command line entry point: ``owfecs {plan,verify,export,sweep,oracle}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from .crossing import build_crossing_set
from .evaluation import RADIAL, RING, Plan, PlanError, cost_report, verify_plan
from .export import export_model
from .farm import CandidateError, LayoutError, generate_candidates, load_layout, to_per_unit
from .heuristics import HeuristicError, sweep_cws_plan, sweep_sensitivity
from .model import ModelError, ModelOptions, build_radial_model, build_ring_model
from .report import render_svg, write_report
from .solver.bb import SolveLimits, extract_plan, solve_bb
from .solver.oracle import InstanceTooLargeError, OracleInfeasibleError, brute_force_oracle, brute_force_radial

EXIT_OK, EXIT_INVALID, EXIT_SOLVER, EXIT_USAGE = 0, 1, 2, 64
SOLVERS = ("bb", "oracle", "sweep-cws", "export-only")

log = logging.getLogger("owfecs")


class UsageError(Exception):
    pass


class SolverFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass(frozen=True)
class RunConfig:
    input: Path
    command: str
    topology: str
    solver: str
    options: ModelOptions
    limits: SolveLimits
    out: Path


def _common(p, model=True):
    p.add_argument("--input", required=True, type=Path, help="layout JSON")
    p.add_argument("--max-range", type=float, default=None, help="candidate cable range in km (default: 2.1 x grid spacing)")
    if model:
        p.add_argument("--topology", choices=(RING, RADIAL), default=RING)
        p.add_argument("--pwl-cuts", type=int, default=9, help="tangent cuts per cable for the loss term")
        p.add_argument("--kdct", action=argparse.BooleanOptionalAction, default=True, help="add k-DCT strengthening")
        p.add_argument("--y0", type=int, default=None, help="substation cables left out of the k-DCT tree (default R_min)")
        p.add_argument("--cac", action=argparse.BooleanOptionalAction, default=True, help="forbid crossing cables")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="owfecs", description="Collector system planning for offshore wind farms.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("plan", help="solve and write plan.json, report.json, report.txt, layout.svg")
    _common(p)
    p.add_argument("--solver", choices=SOLVERS, default="bb")
    p.add_argument("--gap", type=float, default=0.0, help="relative gap target")
    p.add_argument("--time-limit", type=float, default=600.0, help="seconds")
    p.add_argument("--node-limit", type=int, default=None)
    p.add_argument("--start-wt", default=None, help="sweep start turbine (sweep-cws)")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")

    p = sub.add_parser("verify", help="check a plan file")
    _common(p, model=False)
    p.add_argument("--plan", required=True, type=Path)
    p.add_argument("--out", type=Path, default=None, help="write the JSON report here instead of stdout")

    p = sub.add_parser("export", help="write the model as LP or MPS")
    _common(p)
    p.add_argument("--format", choices=("lp", "mps"), default="lp")
    p.add_argument("--out", type=Path, default=Path("."), help="output file or directory")

    p = sub.add_parser("sweep", help="sweep + savings heuristic from every start turbine (CSV)")
    _common(p, model=False)
    p.add_argument("--start-wt", default=None, help="only this start")
    p.add_argument("--out", type=Path, default=None, help="CSV path (default stdout)")

    p = sub.add_parser("oracle", help="exhaustive solve of a tiny farm (at most 9 turbines)")
    _common(p)
    p.add_argument("--out", type=Path, default=None, help="write plan.json into this directory")
    return ap


def _load(args):
    try:
        layout = load_layout(args.input.read_text())
    except OSError as exc:
        raise LayoutError(f"cannot read {args.input}: {exc}") from exc
    candidates = generate_candidates(layout, args.max_range)
    return layout, to_per_unit(layout), candidates, build_crossing_set(candidates)


def _options(args) -> ModelOptions:
    return ModelOptions(pwl_tangents=args.pwl_cuts, enable_kdct=args.kdct, y0=args.y0, enable_cac=args.cac)


def _model(args, net, candidates, crossings):
    opts = _options(args)
    if args.topology == RING:
        return build_ring_model(net, candidates, crossings, opts)
    return build_radial_model(net, candidates, crossings, opts)


def _cmd_plan(args) -> int:
    layout, net, candidates, crossings = _load(args)
    cfg = RunConfig(
        args.input, "plan", args.topology, args.solver, _options(args),
        SolveLimits(args.time_limit, args.gap, args.node_limit), args.out,
    )
    gap = None
    if cfg.solver == "export-only":
        cfg.out.mkdir(parents=True, exist_ok=True)
        model = _model(args, net, candidates, crossings)
        (cfg.out / "model.lp").write_text(export_model(model, "lp", layout.name or "model"))
        return EXIT_OK
    if cfg.solver == "bb":
        sol = solve_bb(_model(args, net, candidates, crossings), cfg.limits)
        log.info("solver summary %s", json.dumps(sol.summary()))
        if not sol.has_incumbent:
            raise SolverFailure(f"no feasible plan found (status {sol.status})")
        if sol.status != "Optimal":
            log.warning("stopped with status %s, gap %.4f%%", sol.status, 100 * sol.gap)
        plan = extract_plan(sol, candidates)
        gap = 100 * sol.gap
    elif cfg.solver == "oracle":
        crs = crossings if args.cac else None
        fn = brute_force_oracle if cfg.topology == RING else brute_force_radial
        plan = fn(net, candidates, crs, loss_model="pwl", pwl_tangents=args.pwl_cuts).plan
        gap = 0.0
    else:
        if cfg.topology != RING:
            raise UsageError("sweep-cws builds ring plans only")
        start = args.start_wt or layout.turbines[0].id
        plan = sweep_cws_plan(layout, start, candidates).plan
    cfg.out.mkdir(parents=True, exist_ok=True)
    report = cost_report(plan, net, gap=gap)
    violations = crossings.violations(plan.cable_ids)
    (cfg.out / "plan.json").write_text(plan.to_json() + "\n")
    (cfg.out / "report.json").write_text(write_report(report, "json"))
    (cfg.out / "report.txt").write_text(write_report(report, "text"))
    (cfg.out / "layout.svg").write_text(render_svg(layout, plan, candidates, violations))
    sys.stdout.write(write_report(report, "text"))
    return EXIT_OK


def _cmd_verify(args) -> int:
    layout, net, candidates, crossings = _load(args)
    try:
        plan = Plan.from_json(args.plan.read_text(), candidates, layout)
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise PlanError(f"cannot read plan {args.plan}: {exc}") from exc
    report = verify_plan(plan, net, candidates, crossings)
    text = report.to_json() + "\n"
    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    for c in report.checks:
        if not c.passed:
            log.error("%s: %s", c.name, c.detail)
    return EXIT_OK if report.passed else EXIT_INVALID


def _cmd_export(args) -> int:
    layout, net, candidates, crossings = _load(args)
    text = export_model(_model(args, net, candidates, crossings), args.format, layout.name or "model")
    out = args.out
    if out.is_dir() or not out.suffix:
        out.mkdir(parents=True, exist_ok=True)
        out = out / f"model.{args.format}"
    out.write_text(text)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    layout, net, candidates, crossings = _load(args)
    table = sweep_sensitivity(layout, candidates)
    if args.start_wt:
        if args.start_wt not in net.turbines:
            raise HeuristicError(f"unknown start turbine {args.start_wt!r}")
        table = replace(table, rows=tuple(r for r in table.rows if r.start_id == args.start_wt))
    text = table.to_csv()
    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_oracle(args) -> int:
    layout, net, candidates, crossings = _load(args)
    crs = crossings if args.cac else None
    fn = brute_force_oracle if args.topology == RING else brute_force_radial
    res = fn(net, candidates, crs, loss_model="pwl", pwl_tangents=args.pwl_cuts)
    doc = {"objective": res.objective, "investment": res.investment, "loss_cost": res.loss_cost, "plan": res.plan.to_dict()}
    sys.stdout.write(json.dumps(doc, indent=2) + "\n")
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "plan.json").write_text(res.plan.to_json() + "\n")
    return EXIT_OK


COMMANDS = {"plan": _cmd_plan, "verify": _cmd_verify, "export": _cmd_export, "sweep": _cmd_sweep, "oracle": _cmd_oracle}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "gap", 0.0) < 0:
        sys.stderr.write("owfecs: error: --gap must be nonnegative\n")
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        sys.stderr.write(f"owfecs: error: {exc}\n")
        return EXIT_USAGE
    except (LayoutError, CandidateError, ModelError, PlanError, HeuristicError, InstanceTooLargeError) as exc:
        sys.stderr.write(f"owfecs: invalid input: {exc}\n")
        return EXIT_INVALID
    except (SolverFailure, OracleInfeasibleError) as exc:
        sys.stderr.write(f"owfecs: solver failure: {exc}\n")
        return EXIT_SOLVER


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
