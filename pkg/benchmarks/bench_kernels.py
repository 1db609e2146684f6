#!/usr/bin/env python3
"""Benchmark the jitted kernels against the vectorized numpy fallback.

The workloads are the full scans the verifiers run on valid inputs (no early
exit) plus the brute-force enumeration oracle.  Matrices are exact int64
encodings of the rational matrices the library actually produces.

Usage: python benchmarks/bench_kernels.py
"""

import random
import time

import numpy as np

from treel0 import random_hierarchy, random_tree
from treel0._backend import encode_square
from treel0 import _kernels_numpy

try:
    from treel0 import _kernels_numba

    HAS_NUMBA = True
except ImportError:
    _kernels_numba = None
    HAS_NUMBA = False


def encoded(matrix):
    m = encode_square(matrix.n, matrix.values)
    assert m is not None
    return m


def time_call(fn, *args, repeats=5):
    fn(*args)  # warmup (and JIT compilation for the numba side)
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def ultrametric_case(n, seed):
    rng = random.Random(seed)
    labels = tuple(f"e{i}" for i in range(n))
    return encoded(random_hierarchy(labels, rng).induced_matrix(labels))


def tree_metric_case(n, seed):
    rng = random.Random(seed)
    labels = tuple(f"e{i}" for i in range(n))
    return encoded(random_tree(labels, rng).induced_matrix(labels))


def oracle_case(seed, num_values):
    rng = random.Random(seed)
    codes = np.array([rng.randrange(num_values) for _ in range(6)], dtype=np.int64)
    lo = np.zeros(6, dtype=np.int64)
    triples = np.array([[0, 1, 3], [0, 2, 4], [1, 2, 5], [3, 4, 5]], dtype=np.int64)
    return codes, lo, triples, num_values


def report(name, numpy_s, numba_s):
    if numba_s is None:
        print(f"{name:<38} numpy {numpy_s * 1e3:8.3f} ms   numba      n/a")
        return
    speedup = numpy_s / numba_s if numba_s > 0 else float("inf")
    print(
        f"{name:<38} numpy {numpy_s * 1e3:8.3f} ms   "
        f"numba {numba_s * 1e3:8.3f} ms   x{speedup:.1f}"
    )


def main():
    print(f"numba available: {HAS_NUMBA}")
    print()
    for n in (32, 64, 96):
        m = ultrametric_case(n, seed=n)
        np_t = time_call(_kernels_numpy.ultra_violation, m)
        nb_t = time_call(_kernels_numba.ultra_violation, m) if HAS_NUMBA else None
        report(f"three-point scan, n={n}", np_t, nb_t)
    print()
    for n in (32, 64, 96):
        m = tree_metric_case(n, seed=n)
        np_t = time_call(_kernels_numpy.four_point_violation, m)
        nb_t = time_call(_kernels_numba.four_point_violation, m) if HAS_NUMBA else None
        report(f"four-point scan, n={n}", np_t, nb_t)
    print()
    for num_values in (5, 9, 13):
        args = oracle_case(seed=num_values, num_values=num_values)
        np_t = time_call(_kernels_numpy.best_ultrametric_assignment, *args)
        nb_t = (
            time_call(_kernels_numba.best_ultrametric_assignment, *args)
            if HAS_NUMBA
            else None
        )
        report(f"enumeration oracle, grid={num_values}", np_t, nb_t)


if __name__ == "__main__":
    main()
