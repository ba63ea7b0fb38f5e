import json
import xml.etree.ElementTree as ET

import pytest

from owfecs.evaluation import RING, CostReport, Plan, cost_report, route_cable_ids
from owfecs.report import render_svg, write_report

SVG = "{http://www.w3.org/2000/svg}"


def t5_plan(case):
    routes = [("WT1", "WT2", "WT3"), ("WT4", "WT5")]
    return Plan.from_ids(RING, [p for r in routes for p in route_cable_ids(r, "Sub")], case.candidates, routes)


def test_text_report_rows(t5_case):
    rep = cost_report(t5_plan(t5_case), t5_case.net, gap=0.0)
    text = write_report(rep)
    labels = [line.split("  ")[0] for line in text.splitlines()]
    assert labels == ["Investment", "Operation", "EENG", "Total", "Loss rate", "Gap"]
    assert f"{rep.total / 1e6:.3f} M" in text
    assert "0.00 %" in text


def test_gap_missing_is_na():
    rep = CostReport(1e6, 2e5, 0.0, 1.2e6, 0.5, None)
    assert write_report(rep).splitlines()[-1].endswith("n/a")


def test_json_report_round_trip(t5_case):
    rep = cost_report(t5_plan(t5_case), t5_case.net, gap=1.5)
    assert CostReport.from_dict(json.loads(write_report(rep, "json"))) == rep
    with pytest.raises(ValueError):
        write_report(rep, "html")


def test_svg_elements(t5_case):
    plan = t5_plan(t5_case)
    svg = render_svg(t5_case.layout, plan, t5_case.candidates)
    root = ET.fromstring(svg)
    circles = root.iter(f"{SVG}circle")
    assert sum(1 for c in circles if c.get("class") == "turbine") == 5
    assert sum(1 for r in root.iter(f"{SVG}rect") if r.get("class") == "substation") == 1
    assert sum(1 for _ in root.iter(f"{SVG}path")) == len(plan.cables)
    assert sum(1 for _ in root.iter(f"{SVG}line")) == len(t5_case.candidates)
    assert render_svg(t5_case.layout, plan, t5_case.candidates) == svg


def test_svg_marks_violations(t5_case):
    pair = t5_case.crossings.pairs[0]
    plan = Plan.from_ids(RING, list(pair), t5_case.candidates)
    root = ET.fromstring(render_svg(t5_case.layout, plan, violations=[pair]))
    assert sum(1 for c in root.iter(f"{SVG}circle") if c.get("class") == "violation") == 1
    assert all(p.get("stroke") == "#d62728" for p in root.iter(f"{SVG}path"))


def test_svg_empty_plan(t5_case):
    root = ET.fromstring(render_svg(t5_case.layout, None))
    assert not list(root.iter(f"{SVG}path"))
