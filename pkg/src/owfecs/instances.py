"""Small reproducible farm layouts for tests, benchmarks and examples."""

from __future__ import annotations

import numpy as np

from .farm import SUBSTATION, TURBINE, CableParams, EconomicParams, Layout, Node

DEFAULT_CABLE = CableParams(
    capacity_mw=15.0,
    cost_per_km=4.0e6,
    r_ohm_per_km=0.12,
    x_ohm_per_km=0.11,
    voltage_kv=35.0,
)


def make_layout(name, sub_xy, turbines, cable=DEFAULT_CABLE, economics=EconomicParams()) -> Layout:
    """``turbines`` is a sequence of ``(x_km, y_km, p_mw)``; ids become WT1, WT2, ..."""
    nodes = [Node("Sub", SUBSTATION, float(sub_xy[0]), float(sub_xy[1]))]
    for k, (x, y, p) in enumerate(turbines, start=1):
        nodes.append(Node(f"WT{k}", TURBINE, float(x), float(y), float(p)))
    return Layout(name, tuple(nodes), cable, economics)


T5_RANGE_KM = 2.1


def t5() -> Layout:
    """Five 5 MW turbines around a central substation, 15 MW cables (two rings)."""
    pts = [(-1, 1, 5), (0, 1, 5), (1, 1, 5), (-0.5, -1, 5), (0.5, -1, 5)]
    return make_layout("T5", (0, 0), pts)


T5_ASYM_RANGE_KM = 2.5


def t5_asymmetric() -> Layout:
    """Six uneven turbines east of the substation, so the sweep start turbine matters."""
    pts = [(1.0, 1.3, 5), (2.6, 1.0, 5), (1.1, 0.1, 5), (2.0, -0.4, 5), (0.8, -1.2, 5), (2.9, -1.6, 5)]
    return make_layout("T5-asym", (0, 0), pts)


def jittered_grid(
    n_turbines: int,
    seed: int,
    spacing_km: float = 1.0,
    jitter: float = 0.15,
    p_mw: float = 5.0,
    cable: CableParams = DEFAULT_CABLE,
) -> Layout:
    """Turbines on random cells of a jittered square grid with the substation at its centre.

    The centre cell is reserved for the substation; everything is seeded.
    """
    rng = np.random.default_rng(seed)
    side = 3
    while side * side - 1 < n_turbines:
        side += 2
    half = side // 2
    cells = [(c, r) for r in range(-half, half + 1) for c in range(-half, half + 1) if (c, r) != (0, 0)]
    pick = sorted(rng.permutation(len(cells))[:n_turbines])
    pts = []
    for k in pick:
        x, y = cells[k]
        dx, dy = rng.uniform(-jitter, jitter, size=2)
        pts.append((round((x + dx) * spacing_km, 4), round((y + dy) * spacing_km, 4), p_mw))
    return make_layout(f"grid{n_turbines}-s{seed}", (0.0, 0.0), pts, cable)
