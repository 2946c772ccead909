"""Compare the compiled and pure-Python RK4 kernels.

Run with ``python benchmarks/bench_kernels.py [--steps N] [--repeat R]``.
Both backends integrate the same periodic 2x2 system; the script reports the
best wall time of each, the speed-up, and the largest difference between
their outputs (they should agree to rounding).
"""

import argparse
import timeit

import numpy as np

from cfl import kernels


def coefficients(n_steps, T=2 * np.pi):
    t = np.linspace(0.0, T, 2 * n_steps + 1)
    M = np.zeros((t.size, 2, 2))
    M[:, 0, 1] = -(1.0 + 0.3 * np.sin(t))
    M[:, 1, 0] = 1.0
    return M, T / n_steps


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    coef, h = coefficients(args.steps)
    try:
        kernels.get_backend("cython")
        names = ["cython", "python"]
    except ImportError:
        print("compiled kernel not built; timing the pure-Python backend only")
        names = ["python"]

    results, times = {}, {}
    for name in names:
        results[name] = kernels.propagate_linear2(coef, h, backend=name)
        timer = timeit.Timer(lambda: kernels.propagate_linear2(coef, h, backend=name))
        times[name] = min(timer.repeat(repeat=args.repeat, number=1))
        print(f"{name:>7}: {times[name] * 1e3:9.2f} ms for {args.steps} RK4 steps")
    if len(names) == 2:
        diff = float(np.max(np.abs(results["cython"] - results["python"])))
        print(f"speed-up: {times['python'] / times['cython']:.1f}x   max |difference|: {diff:.2e}")


if __name__ == "__main__":
    main()
