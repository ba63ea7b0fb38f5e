"""Compare the compiled and numpy dual simplex kernels.

Times a root LP solve and a full branch and bound on a few ring models and
checks that both kernels reach the same objective with the same pivot count.

    python3 benchmarks/bench_simplex.py [--turbines 6 8] [--repeat 3]
"""

import argparse
import statistics
import time

from owfecs.crossing import build_crossing_set
from owfecs.farm import generate_candidates, to_per_unit
from owfecs.instances import jittered_grid
from owfecs.model import build_ring_model
from owfecs.solver.bb import solve_bb
from owfecs.solver.kernel import KERNELS
from owfecs.solver.lp import LinearProgram, solve_lp


def _timed(fn, repeat):
    times, out = [], None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return statistics.median(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--turbines", type=int, nargs="+", default=[6, 8])
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--max-range", type=float, default=1.6)
    args = ap.parse_args(argv)

    kernels = sorted(KERNELS)
    print(f"kernels: {', '.join(kernels)}")
    print(f"{'case':<14}{'kernel':<8}{'root LP s':>11}{'B&B s':>10}{'nodes':>7}{'pivots':>9}  objective")
    for n in args.turbines:
        layout = jittered_grid(n, args.seed)
        net = to_per_unit(layout)
        cand = generate_candidates(layout, args.max_range)
        model = build_ring_model(net, cand, build_crossing_set(cand))
        lp = LinearProgram.from_model(model)
        rows = {}
        for k in kernels:
            t_lp, root = _timed(lambda: solve_lp(lp, kernel=k), args.repeat)
            t_bb, sol = _timed(lambda: solve_bb(model, kernel=k), args.repeat)
            rows[k] = (root.objective, sol.objective, sol.lp_iterations)
            print(f"{layout.name:<14}{k:<8}{t_lp:>11.4f}{t_bb:>10.3f}{sol.nodes_explored:>7}{sol.lp_iterations:>9}  {sol.objective:.6f}")
        if len(rows) > 1:
            (a, b) = rows.values()
            same = abs(a[1] - b[1]) <= 1e-9 * abs(a[1]) and a[2] == b[2]
            print(f"{'':<14}kernels agree: {same}")


if __name__ == "__main__":
    main()
