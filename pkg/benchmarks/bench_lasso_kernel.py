"""Benchmark the L1 coordinate-descent kernel: numba vs pure numpy.

Times a full cross-validation-sized workload (one penalty path on a
high-dimensional problem) on both code paths and reports the speedup.

Run:  python benchmarks/bench_lasso_kernel.py [--p 300] [--n 200] [--repeats 3]
"""

import argparse
import time

import numpy as np

from advlin._kernels import _cd_path_numba, _cd_path_numpy, numba_enabled
from advlin.designs import DesignSpec, generate
from advlin.estimators import LassoConfig, _lambda_grid, _standardized


def build_problem(p, n, seed=0):
    design = DesignSpec(kind="dense", p=p, r=0.1, theta0_kind="sparse",
                        sparsity=max(1, p // 30), noise_var=1.0)
    _, data = generate(design, n, seed=seed)
    xs, _ = _standardized(data.x, True)
    lam_max = float(np.max(np.abs(xs.T @ data.y))) / n
    lambdas = _lambda_grid(lam_max, LassoConfig(lambda_min_ratio=0.01))
    gram = xs.T @ xs / n
    return 0.5 * (gram + gram.T), xs.T @ data.y / n, lambdas


def time_path(fn, args, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--p", type=int, default=300)
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    gram, xty, lambdas = build_problem(args.p, args.n)
    kernel_args = (gram, xty, lambdas, 1e-8, 100_000)

    print(f"problem: p={args.p}, n={args.n}, {len(lambdas)} penalties "
          f"(numba available: {numba_enabled()})")

    c_np, _ = _cd_path_numpy(*kernel_args)
    t_np = time_path(_cd_path_numpy, kernel_args, args.repeats)
    print(f"numpy fallback : {t_np * 1e3:9.1f} ms per path")

    _cd_path_numba(*kernel_args)  # compile before timing
    c_nb, _ = _cd_path_numba(*kernel_args)
    t_nb = time_path(_cd_path_numba, kernel_args, args.repeats)
    print(f"numba kernel   : {t_nb * 1e3:9.1f} ms per path")

    agree = np.max(np.abs(c_np - c_nb))
    print(f"max coefficient difference between paths: {agree:.2e}")
    print(f"speedup: {t_np / t_nb:.1f}x")


if __name__ == "__main__":
    main()
