"""Jitted scan kernels. Semantics must match _kernels_numpy exactly."""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def ultra_violation(m):
    n = m.shape[0]
    for i in range(n - 2):
        for j in range(i + 1, n - 1):
            a = m[i, j]
            for k in range(j + 1, n):
                b = m[i, k]
                c = m[j, k]
                hi = a
                if b > hi:
                    hi = b
                if c > hi:
                    hi = c
                cnt = 0
                if a == hi:
                    cnt += 1
                if b == hi:
                    cnt += 1
                if c == hi:
                    cnt += 1
                if cnt < 2:
                    return i, j, k
    return -1, -1, -1


@njit(cache=True)
def triangle_violation(m):
    n = m.shape[0]
    for i in range(n - 2):
        for j in range(i + 1, n - 1):
            a = m[i, j]
            for k in range(j + 1, n):
                b = m[i, k]
                c = m[j, k]
                hi = a
                if b > hi:
                    hi = b
                if c > hi:
                    hi = c
                if 2 * hi > a + b + c:
                    return i, j, k
    return -1, -1, -1


@njit(cache=True)
def four_point_violation(m):
    n = m.shape[0]
    for i in range(n - 3):
        for j in range(i + 1, n - 2):
            for k in range(j + 1, n - 1):
                for l in range(k + 1, n):
                    s1 = m[i, j] + m[k, l]
                    s2 = m[i, k] + m[j, l]
                    s3 = m[i, l] + m[j, k]
                    hi = s1
                    if s2 > hi:
                        hi = s2
                    if s3 > hi:
                        hi = s3
                    cnt = 0
                    if s1 == hi:
                        cnt += 1
                    if s2 == hi:
                        cnt += 1
                    if s3 == hi:
                        cnt += 1
                    if cnt < 2:
                        return i, j, k, l
    return -1, -1, -1, -1


@njit(cache=True)
def best_ultrametric_assignment(codes, lo, triples, num_values):
    pair_count = codes.size
    pows = np.empty(pair_count, np.int64)
    p = np.int64(1)
    for i in range(pair_count - 1, -1, -1):
        pows[i] = p
        p *= num_values
    total = p
    best_cost = pair_count + 1
    best_code = np.int64(-1)
    assign = np.empty(pair_count, np.int64)
    for code in range(total):
        ok = True
        for i in range(pair_count):
            d = (code // pows[i]) % num_values
            if d < lo[i]:
                ok = False
                break
            assign[i] = d
        if not ok:
            continue
        for t in range(triples.shape[0]):
            x = assign[triples[t, 0]]
            y = assign[triples[t, 1]]
            z = assign[triples[t, 2]]
            hi = x
            if y > hi:
                hi = y
            if z > hi:
                hi = z
            cnt = 0
            if x == hi:
                cnt += 1
            if y == hi:
                cnt += 1
            if z == hi:
                cnt += 1
            if cnt < 2:
                ok = False
                break
        if not ok:
            continue
        cost = 0
        for i in range(pair_count):
            if assign[i] != codes[i]:
                cost += 1
        if cost < best_cost:
            best_cost = cost
            best_code = code
    out = np.empty(pair_count, np.int64)
    for i in range(pair_count):
        out[i] = (best_code // pows[i]) % num_values
    return best_cost, out
