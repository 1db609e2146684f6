"""Kernel backend selection and exact int64 encoding of rational matrices.

The metric verifiers and the brute-force enumeration oracle spend their time
in tight scans over pair values.  Those scans only ever add two or three
entries and compare; scaling every entry by the least common multiple of the
denominators turns them into exact int64 arithmetic, which numba or numpy can
chew through.  When the scaled values would not fit in an int64 the callers
fall back to plain Fraction loops, so results are exact in every case.

The backend is chosen once, from the ``TREEL0_BACKEND`` environment variable:

* ``numba`` - jitted loop kernels (default when numba imports)
* ``numpy`` - vectorized kernels, no compilation step
* ``exact`` - skip encoding entirely; callers use their Fraction paths

All backends return bitwise-identical results (first witness in
lexicographic order, lexicographically smallest optimal assignment).
"""

from __future__ import annotations

import os
from itertools import product
from math import lcm

import numpy as np

ENV_VAR = "TREEL0_BACKEND"
_CHOICES = ("numba", "numpy", "exact")

# Values must survive three-term sums without overflowing int64.
INT64_LIMIT = 2**61 - 1

_backend: str | None = None


def _numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def get_backend() -> str:
    """Resolve (once) and return the active backend name."""
    global _backend
    if _backend is None:
        requested = os.environ.get(ENV_VAR, "").strip().lower()
        if requested:
            if requested not in _CHOICES:
                raise ValueError(
                    f"{ENV_VAR} must be one of {_CHOICES}, got {requested!r}"
                )
            if requested == "numba" and not _numba_available():
                raise ImportError(f"{ENV_VAR}=numba but numba is not importable")
            _backend = requested
        else:
            _backend = "numba" if _numba_available() else "numpy"
    return _backend


def set_backend(name: str) -> None:
    """Override the backend at runtime (used by tests and the benchmark)."""
    global _backend
    if name not in _CHOICES:
        raise ValueError(f"backend must be one of {_CHOICES}, got {name!r}")
    if name == "numba" and not _numba_available():
        raise ImportError("numba is not importable")
    _backend = name


def encode_square(n: int, values) -> np.ndarray | None:
    """Scale pair values (lexicographic (i, j) order, i < j) to an exact
    int64 symmetric matrix with zero diagonal, or None if they don't fit."""
    scale = 1
    for v in values:
        scale = lcm(scale, v.denominator)
        if scale > INT64_LIMIT:
            return None
    scaled = []
    for v in values:
        s = v.numerator * (scale // v.denominator)
        if abs(s) > INT64_LIMIT:
            return None
        scaled.append(s)
    m = np.zeros((n, n), dtype=np.int64)
    idx = 0
    for i in range(n - 1):
        for j in range(i + 1, n):
            m[i, j] = scaled[idx]
            m[j, i] = scaled[idx]
            idx += 1
    return m


def _kernels():
    if get_backend() == "numba":
        from . import _kernels_numba as mod
    else:
        from . import _kernels_numpy as mod
    return mod


def _as_hit(raw) -> tuple[int, ...] | None:
    return None if raw[0] < 0 else tuple(int(x) for x in raw)


def find_ultra_violation(m: np.ndarray) -> tuple[int, int, int] | None:
    """First triple (i < j < k) whose largest two pair values differ."""
    return _as_hit(_kernels().ultra_violation(m))


def find_triangle_violation(m: np.ndarray) -> tuple[int, int, int] | None:
    """First triple (i < j < k) where one value exceeds the sum of the others."""
    return _as_hit(_kernels().triangle_violation(m))


def find_four_point_violation(m: np.ndarray) -> tuple[int, int, int, int] | None:
    """First quadruple (i < j < k < l) whose largest two pairing sums differ."""
    return _as_hit(_kernels().four_point_violation(m))


def best_ultrametric_assignment(
    codes: np.ndarray, lo: np.ndarray, triples: np.ndarray, num_values: int
) -> tuple[int, np.ndarray]:
    """Brute-force minimum-disagreement ultrametric over a coded value grid.

    Pair p may take any value index in [lo[p], num_values - 1]; an assignment
    is feasible when every row of ``triples`` (three pair slots forming a
    triple of elements) has its two largest indices equal.  The cost of an
    assignment is the number of slots differing from ``codes`` (a code of -1
    never matches).  Ties break to the lexicographically smallest assignment.
    """
    if get_backend() == "exact":
        return _py_best_assignment(codes, lo, triples, num_values)
    cost, assign = _kernels().best_ultrametric_assignment(
        np.asarray(codes, dtype=np.int64),
        np.asarray(lo, dtype=np.int64),
        np.asarray(triples, dtype=np.int64).reshape(-1, 3),
        num_values,
    )
    return int(cost), np.asarray(assign, dtype=np.int64)


def _py_best_assignment(codes, lo, triples, num_values):
    codes = list(codes)
    lo = list(lo)
    triples = [tuple(t) for t in np.asarray(triples, dtype=np.int64).reshape(-1, 3)]
    pair_count = len(codes)
    best_cost = pair_count + 1
    best = None
    for assign in product(range(num_values), repeat=pair_count):
        if any(a < b for a, b in zip(assign, lo)):
            continue
        ok = True
        for p, q, r in triples:
            x, y, z = assign[p], assign[q], assign[r]
            hi = max(x, y, z)
            if (x == hi) + (y == hi) + (z == hi) < 2:
                ok = False
                break
        if not ok:
            continue
        cost = sum(1 for a, c in zip(assign, codes) if a != c)
        if cost < best_cost:
            best_cost = cost
            best = assign
    return best_cost, np.array(best, dtype=np.int64)
