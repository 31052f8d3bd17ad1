"""Time the numba kernels against their numpy fallbacks.

Usage: python benchmarks/bench_kernels.py [--ntheta 64 --nphi 128 --points 20000 --repeat 5]
"""

import argparse
import os
import time

import numpy as np

from pmclab import _accel
from pmclab.grid import SphereGrid
from pmclab.region import StarRegion, contains, recenter


def bumpy(grid, rng):
    d = grid.directions
    a = rng.normal(size=3) * 0.1
    return StarRegion(grid, np.zeros(3), 0.1 * np.tanh(d @ a) + 0.05 * d[..., 0] * d[..., 1])


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--ntheta", type=int, default=64)
    ap.add_argument("--nphi", type=int, default=128)
    ap.add_argument("--points", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    g = SphereGrid(args.ntheta, args.nphi)
    reg = bumpy(g, rng)
    dirs = rng.normal(size=(args.points, 3))
    pts = rng.uniform(-1.3, 1.3, size=(args.points, 3))
    offset = np.array([0.2, -0.1, 0.05])

    cases = {
        "interp_field": lambda: _accel.interp_field(reg.log_radius, g.theta, dirs),
        "inside": lambda: contains(reg, pts),
        "recenter": lambda: recenter(reg, offset)[0].log_radius,
    }
    if not _accel._HAVE_NUMBA:
        print("numba not importable; only the numpy path is timed")
    print(f"grid {args.ntheta}x{args.nphi}, {args.points} points, best of {args.repeat}")
    print(f"{'kernel':<14}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}{'max diff':>12}")
    for name, fn in cases.items():
        os.environ["PMCLAB_NUMBA"] = "1"
        fn()  # compile
        t_nb, out_nb = best_of(fn, args.repeat)
        os.environ["PMCLAB_NUMBA"] = "0"
        t_np, out_np = best_of(fn, max(1, args.repeat // 2))
        diff = float(np.max(np.abs(np.asarray(out_nb, float) - np.asarray(out_np, float))))
        print(f"{name:<14}{t_nb:>12.4g}{t_np:>12.4g}{t_np / t_nb:>10.1f}{diff:>12.2e}")
    os.environ.pop("PMCLAB_NUMBA", None)


if __name__ == "__main__":
    main()
