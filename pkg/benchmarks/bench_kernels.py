"""Compare the numba kernels against the pure-numpy fallbacks.

Run from the repository root::

    python3 benchmarks/bench_kernels.py

The numba build pays a one-off JIT compilation cost (cached on disk); the
timings below exclude it via a warm-up call.
"""

from __future__ import annotations

import time

import numpy as np

from ontologx import kernels


def _problem(rng, n, dim):
    matrix = rng.standard_normal((n, dim))
    matrix /= np.linalg.norm(matrix, axis=1)[:, None]
    query = rng.standard_normal(dim)
    query /= np.linalg.norm(query)
    return matrix @ query, matrix @ matrix.T, matrix


def _time(fn, *args, repeats=200):
    fn(*args)  # warm-up (JIT compile for the numba build)
    start = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - start) / repeats


def main():
    rng = np.random.default_rng(0)
    if not kernels.using_numba():
        print("note: numba not active; both columns run the numpy fallback")

    print(f"{'kernel':<16} {'n':>6} {'numpy (ms)':>12} {'numba (ms)':>12} {'speedup':>9}")
    for n in (50, 200, 1000, 4000):
        query_sims, pairwise, matrix = _problem(rng, n, 256)
        k = 10
        t_py = _time(kernels._mmr_order_py, query_sims, pairwise, 0.5, k)
        t_jit = _time(kernels._impl_mmr, query_sims, pairwise, 0.5, k)
        print(
            f"{'mmr_order':<16} {n:>6} {t_py * 1e3:>12.4f} {t_jit * 1e3:>12.4f} "
            f"{t_py / t_jit:>8.1f}x"
        )

    for n in (50, 200, 1000, 4000):
        _, _, matrix = _problem(rng, n, 256)
        order = rng.permutation(n).astype(np.int64)
        t_py = _time(kernels._diverse_order_py, matrix, order, 0.7, n, repeats=20)
        t_jit = _time(kernels._impl_diverse, matrix, order, 0.7, n, repeats=20)
        print(
            f"{'diverse_order':<16} {n:>6} {t_py * 1e3:>12.4f} {t_jit * 1e3:>12.4f} "
            f"{t_py / t_jit:>8.1f}x"
        )


if __name__ == "__main__":
    main()
