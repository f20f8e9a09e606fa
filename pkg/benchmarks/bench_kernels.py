"""Time the pure-NumPy and compiled kernels against each other.

Usage: python3 benchmarks/bench_kernels.py [--rows 8] [--cols 8]
       [--rounds 2000] [--repeats 5] [--p 0.6]
"""
import argparse
import time

import numpy as np

from hopsync import _kernels_py
from hopsync.channel import ChannelModel, sample_masks
from hopsync.model import grid_topology

try:
    from hopsync import _kernels_cy
except ImportError:
    _kernels_cy = None


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rows", type=int, default=8)
    ap.add_argument("--cols", type=int, default=8)
    ap.add_argument("--rounds", type=int, default=2000)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--p", type=float, default=0.6)
    args = ap.parse_args()

    topo = grid_topology(args.rows, args.cols)
    eu, ev = topo.edge_arrays()
    n = topo.node_count
    masks = sample_masks(ChannelModel(p=args.p, seed=1), topo, args.rounds)
    rng = np.random.default_rng(0)
    t0 = rng.uniform(0.0, 0.1, n)
    series = rng.uniform(0.0, 0.1, args.rounds)

    backends = [("python", _kernels_py)]
    if _kernels_cy is not None:
        backends.append(("cython", _kernels_cy))
    else:
        print("compiled backend not built; timing pure python only")

    print(f"grid {args.rows}x{args.cols} ({n} nodes, {len(eu)} edges), "
          f"{args.rounds} rounds, p={args.p}, best of {args.repeats}")
    print(f"{'kernel':<14}{'backend':<10}{'seconds':>12}{'speedup':>10}")
    results = {}
    for label, mod in backends:
        dt = best_of(lambda m=mod: m.run_rounds(t0, eu, ev, n, masks, 1e-3),
                     args.repeats)
        results[("run_rounds", label)] = dt
    for label, mod in backends:
        dt = best_of(lambda m=mod: m.filter_series(series, 1.002),
                     args.repeats)
        results[("filter_series", label)] = dt

    for kernel in ("run_rounds", "filter_series"):
        base = results[(kernel, "python")]
        for label, _ in backends:
            sec = results[(kernel, label)]
            speed = base / sec if sec > 0 else float("inf")
            print(f"{kernel:<14}{label:<10}{sec:>12.6f}{speed:>9.2f}x")

    if _kernels_cy is not None:
        a = _kernels_py.run_rounds(t0, eu, ev, n, masks, 1e-3)
        b = _kernels_cy.run_rounds(t0, eu, ev, n, masks, 1e-3)
        print("bit-identical results:", np.array_equal(a, b))


if __name__ == "__main__":
    main()
