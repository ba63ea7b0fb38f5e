"""Plain-text/JSON cost reports and an SVG drawing of a plan."""

from __future__ import annotations

from typing import Iterable
from xml.sax.saxutils import escape

from .evaluation import CostReport, Plan
from .farm import CandidateSet, Layout

ROWS = (
    ("Investment", "investment", "money"),
    ("Operation", "operation", "money"),
    ("EENG", "eeng", "money"),
    ("Total", "total", "money"),
    ("Loss rate", "loss_rate", "pct"),
    ("Gap", "gap", "pct"),
)


def write_report(report: CostReport, fmt: str = "text") -> str:
    """``fmt="json"`` gives the CostReport serialization; ``"text"`` an aligned table (money in millions)."""
    if fmt == "json":
        return report.to_json() + "\n"
    if fmt != "text":
        raise ValueError(f"unknown report format {fmt!r}")
    lines = []
    width = max(len(label) for label, _, _ in ROWS)
    for label, attr, kind in ROWS:
        v = getattr(report, attr)
        if v is None:
            cell = "n/a"
        elif kind == "money":
            cell = f"{v / 1e6:.3f} M"
        else:
            cell = f"{v:.2f} %"
        lines.append(f"{label:<{width}}  {cell:>14}")
    return "\n".join(lines) + "\n"


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def render_svg(
    layout: Layout,
    plan: Plan | None,
    candidates: CandidateSet | None = None,
    violations: Iterable[tuple[tuple[str, str], tuple[str, str]]] = (),
    size: int = 640,
    margin: int = 40,
) -> str:
    """Nodes, dashed candidate cables, one solid ``<path>`` per invested cable.

    Cables in a violated crossing pair are stroked red and each crossing
    point gets a red ring marker.
    """
    xs = [n.x_km for n in layout.nodes]
    ys = [n.y_km for n in layout.nodes]
    span = max(max(xs) - min(xs), max(ys) - min(ys), 1e-9)
    scale = (size - 2 * margin) / span
    x0, y1 = min(xs), max(ys)

    def pt(node_id):
        n = layout.node(node_id)
        return margin + (n.x_km - x0) * scale, margin + (y1 - n.y_km) * scale

    bad = {tuple(c) for pair in violations for c in pair}
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f"<title>{escape(layout.name or 'layout')}</title>",
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    if candidates is not None:
        out.append('<g id="candidates" stroke="#999" stroke-width="1" stroke-dasharray="4 3">')
        for c in candidates.cables:
            (ax, ay), (bx, by) = pt(c.i), pt(c.j)
            out.append(f'<line x1="{_fmt(ax)}" y1="{_fmt(ay)}" x2="{_fmt(bx)}" y2="{_fmt(by)}"/>')
        out.append("</g>")
    if plan is not None and plan.cables:
        out.append('<g id="cables" fill="none" stroke-width="2.5">')
        for c in plan.cables:
            (ax, ay), (bx, by) = pt(c.i), pt(c.j)
            colour = "#d62728" if c.id in bad else "#1f4e9c"
            out.append(f'<path d="M {_fmt(ax)} {_fmt(ay)} L {_fmt(bx)} {_fmt(by)}" stroke="{colour}"/>')
        out.append("</g>")
    marks = []
    for a, b in violations:
        (p1, p2), (p3, p4) = (pt(a[0]), pt(a[1])), (pt(b[0]), pt(b[1]))
        d = (p2[0] - p1[0]) * (p4[1] - p3[1]) - (p2[1] - p1[1]) * (p4[0] - p3[0])
        if d == 0:
            continue
        t = ((p3[0] - p1[0]) * (p4[1] - p3[1]) - (p3[1] - p1[1]) * (p4[0] - p3[0])) / d
        cx, cy = p1[0] + t * (p2[0] - p1[0]), p1[1] + t * (p2[1] - p1[1])
        marks.append(f'<circle class="violation" cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="9" fill="none" stroke="#d62728" stroke-width="2"/>')
    if marks:
        out.append('<g id="violations">')
        out += marks
        out.append("</g>")
    out.append('<g id="nodes" font-family="sans-serif" font-size="11">')
    sub = layout.substation
    sx, sy = pt(sub.id)
    out.append(f'<rect class="substation" x="{_fmt(sx - 8)}" y="{_fmt(sy - 8)}" width="16" height="16" fill="#333"/>')
    out.append(f'<text x="{_fmt(sx + 10)}" y="{_fmt(sy - 10)}">{escape(sub.id)}</text>')
    for t in layout.turbines:
        tx, ty = pt(t.id)
        out.append(f'<circle class="turbine" cx="{_fmt(tx)}" cy="{_fmt(ty)}" r="6" fill="#2ca02c"/>')
        out.append(f'<text x="{_fmt(tx + 8)}" y="{_fmt(ty - 8)}">{escape(t.id)}</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
