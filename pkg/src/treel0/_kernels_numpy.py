"""Vectorized scan kernels. Semantics must match _kernels_numba exactly.

Witness searches return the lexicographically first violating tuple; the
vectorized scans rely on np.argwhere's C-order to reproduce the loop order
of the jitted kernels.
"""

from __future__ import annotations

import numpy as np


def _strict_upper_triples(n):
    i, j, k = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
    return (i < j) & (j < k), i, j, k


def ultra_violation(m):
    n = m.shape[0]
    if n < 3:
        return (-1, -1, -1)
    mask, i, j, k = _strict_upper_triples(n)
    a = m[i, j]
    b = m[i, k]
    c = m[j, k]
    hi = np.maximum(a, np.maximum(b, c))
    cnt = (a == hi).astype(np.int8) + (b == hi) + (c == hi)
    viol = mask & (cnt < 2)
    hits = np.argwhere(viol)
    if hits.size == 0:
        return (-1, -1, -1)
    return tuple(int(x) for x in hits[0])


def triangle_violation(m):
    n = m.shape[0]
    if n < 3:
        return (-1, -1, -1)
    mask, i, j, k = _strict_upper_triples(n)
    a = m[i, j]
    b = m[i, k]
    c = m[j, k]
    hi = np.maximum(a, np.maximum(b, c))
    viol = mask & (2 * hi > a + b + c)
    hits = np.argwhere(viol)
    if hits.size == 0:
        return (-1, -1, -1)
    return tuple(int(x) for x in hits[0])


def four_point_violation(m):
    n = m.shape[0]
    # One (i, j) anchor pair at a time keeps memory at O(n^2); scanning
    # anchors lexicographically preserves the loop kernel's witness order.
    for i in range(n - 3):
        for j in range(i + 1, n - 2):
            rng = np.arange(j + 1, n)
            if rng.size < 2:
                continue
            sub = m[np.ix_(rng, rng)]
            s1 = m[i, j] + sub
            s2 = m[i, rng][:, None] + m[j, rng][None, :]
            s3 = m[i, rng][None, :] + m[j, rng][:, None]
            hi = np.maximum(s1, np.maximum(s2, s3))
            cnt = (s1 == hi).astype(np.int8) + (s2 == hi) + (s3 == hi)
            kk, ll = np.meshgrid(rng, rng, indexing="ij")
            viol = (kk < ll) & (cnt < 2)
            hits = np.argwhere(viol)
            if hits.size:
                k, l = hits[0]
                return i, j, int(rng[k]), int(rng[l])
    return (-1, -1, -1, -1)


def best_ultrametric_assignment(codes, lo, triples, num_values):
    pair_count = codes.size
    combos = (
        np.indices((num_values,) * pair_count, dtype=np.int16)
        .reshape(pair_count, -1)
        .T
    )
    feasible = (combos >= lo.astype(np.int16)).all(axis=1)
    for t in range(triples.shape[0]):
        x = combos[:, triples[t, 0]]
        y = combos[:, triples[t, 1]]
        z = combos[:, triples[t, 2]]
        hi = np.maximum(x, np.maximum(y, z))
        cnt = (x == hi).astype(np.int8) + (y == hi) + (z == hi)
        feasible &= cnt >= 2
    cost = (combos != codes.astype(np.int16)).sum(axis=1)
    cost = np.where(feasible, cost, pair_count + 1)
    best = int(cost.argmin())  # first minimum = lexicographically smallest
    return int(cost[best]), combos[best].astype(np.int64)
