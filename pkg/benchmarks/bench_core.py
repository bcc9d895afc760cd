"""Compiled core vs numpy fallback on the hot kernels.

Run ``python benchmarks/bench_core.py [--repeat N]``.  Prints the best wall
time of each kernel for both backends and the speedup.
"""

import argparse
import timeit

import numpy as np

from bernfield import _pycore

try:
    from bernfield import _core
except ImportError:
    _core = None

RAD = (_pycore.DIST_RADEMACHER, (0.5, 1.0, -1.0))
GAUSS = (_pycore.DIST_GAUSSIAN, (0.5, 1.0, -1.0))


def cases():
    seeds = np.arange(256, dtype=np.uint64)
    lower = np.zeros(2, dtype=np.int64)
    weights = np.ones((64, 64))
    coords = np.stack(np.meshgrid(np.arange(256), np.arange(256), indexing="ij"), -1)
    coords = coords.reshape(-1, 2).astype(np.int64)
    omega = np.random.default_rng(0).random(1 << 18)
    d_seq = np.array([1 / 8, 1.0, 1 / 8192])
    return {
        "splitmix64 (2^18)": lambda m: m.splitmix64(np.arange(1 << 18, dtype=np.uint64)),
        "draw_sites rademacher (256^2)": lambda m: m.draw_sites(3, 0, coords, *RAD),
        "draw_sites gaussian (256^2)": lambda m: m.draw_sites(3, 0, coords, *GAUSS),
        "box_draw 256 x 64^2": lambda m: m.box_draw(seeds, 0, lower, (64, 64), *RAD),
        "box_weighted_sums 256 x 64^2": lambda m: m.box_weighted_sums(seeds, 0, lower, weights,
                                                                      *RAD),
        "example1_labels (2^18 x 3)": lambda m: m.example1_labels(omega, d_seq),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if _core is None:
        print("compiled extension not built; only the numpy fallback is timed")
    print(f"{'kernel':32s} {'python [ms]':>12s} {'compiled [ms]':>14s} {'speedup':>8s}")
    for name, fn in cases().items():
        py = min(timeit.repeat(lambda: fn(_pycore), number=1, repeat=args.repeat)) * 1e3
        if _core is None:
            print(f"{name:32s} {py:12.2f} {'-':>14s} {'-':>8s}")
            continue
        c = min(timeit.repeat(lambda: fn(_core), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:32s} {py:12.2f} {c:14.2f} {py / c:7.1f}x")


if __name__ == "__main__":
    main()
