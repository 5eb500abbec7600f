"""Compiled vs numpy kernels.

Run ``python benchmarks/bench_kernels.py [--n N] [--repeat R]``.  Prints the
best-of-R wall time of each backend, the speedup and the largest difference
between the two results.
"""

import argparse
import timeit

import numpy as np

from thinsheet import _kernels_py

try:
    from thinsheet import _kernels
except ImportError:  # extension not built
    _kernels = None


def cases(n, rng):
    F = np.eye(3) + 0.3 * rng.normal(size=(n, 3, 3))
    A = np.diag([1.5, 1.0, 0.7])
    M = np.diag([1.2, 0.9, 1.1])
    quats = rng.normal(size=(n, 4))
    return {
        "biot_energy": (lambda k: k.biot_energy(F, 1.0, 0.5)),
        "rotated_distance_min": (lambda k: k.rotated_distance_min(A, M, quats)[0]),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=200_000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if _kernels is None:
        print("compiled extension not available; build with `pip install -e . --no-build-isolation`")
        return 1
    rng = np.random.default_rng(0)
    print(f"{'kernel':<22}{'python [ms]':>12}{'cython [ms]':>12}{'speedup':>9}{'max diff':>11}")
    for name, fn in cases(args.n, rng).items():
        t_py = min(timeit.repeat(lambda: fn(_kernels_py), number=1, repeat=args.repeat))
        t_cy = min(timeit.repeat(lambda: fn(_kernels), number=1, repeat=args.repeat))
        diff = float(np.max(np.abs(np.asarray(fn(_kernels_py)) - np.asarray(fn(_kernels)))))
        print(f"{name:<22}{1e3 * t_py:>12.2f}{1e3 * t_cy:>12.2f}{t_py / t_cy:>9.2f}{diff:>11.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
