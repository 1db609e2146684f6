"""The three code paths (numba, numpy, pure Fraction loops) must agree
bit-for-bit: same verdicts, same first witness, same oracle assignments."""

import random
from fractions import Fraction

import numpy as np
import pytest

from treel0 import check_tree_metric, check_ultrametric
from treel0._backend import (
    INT64_LIMIT,
    encode_square,
    get_backend,
    set_backend,
)
from treel0 import _kernels_numpy

from conftest import matrix, rand_matrix

numba_kernels = pytest.importorskip("treel0._kernels_numba")


def _random_int_matrix(rng, n, hi):
    m = np.zeros((n, n), dtype=np.int64)
    for i in range(n - 1):
        for j in range(i + 1, n):
            m[i, j] = m[j, i] = rng.randint(0, hi)
    return m


class TestKernelEquivalence:
    def test_witness_searches_agree(self):
        rng = random.Random(10)
        for _ in range(60):
            n = rng.randint(3, 12)
            m = _random_int_matrix(rng, n, rng.choice((2, 5, 40)))
            for name in ("ultra_violation", "triangle_violation", "four_point_violation"):
                a = tuple(getattr(numba_kernels, name)(m))
                b = tuple(_kernels_numpy.__dict__[name](m))
                assert a == b, (name, m)

    def test_best_assignment_agrees(self):
        from treel0._backend import _py_best_assignment

        rng = random.Random(11)
        for _ in range(25):
            pair_count = 6
            num_values = rng.randint(2, 5)
            codes = np.array(
                [rng.randint(-1, num_values - 1) for _ in range(pair_count)],
                dtype=np.int64,
            )
            lo = np.array(
                [rng.randint(0, num_values - 1) for _ in range(pair_count)],
                dtype=np.int64,
            )
            triples = np.array(
                [[0, 1, 3], [0, 2, 4], [1, 2, 5], [3, 4, 5]], dtype=np.int64
            )
            results = [
                numba_kernels.best_ultrametric_assignment(codes, lo, triples, num_values),
                _kernels_numpy.best_ultrametric_assignment(codes, lo, triples, num_values),
                _py_best_assignment(codes, lo, triples, num_values),
            ]
            costs = [int(c) for c, _ in results]
            assigns = [tuple(int(x) for x in a) for _, a in results]
            assert len(set(costs)) == 1
            assert len(set(assigns)) == 1


class TestEncoding:
    def test_rational_scaling_is_exact(self):
        d = matrix("abc", Fraction(1, 2), Fraction(1, 3), Fraction(5, 6))
        m = encode_square(3, d.values)
        assert m is not None
        assert m[0, 1] * 2 == m[0, 2] * 3
        assert m[0, 1] == m[1, 0]
        assert m.diagonal().tolist() == [0, 0, 0]

    def test_unencodable_values_fall_back(self):
        huge = Fraction(1, 10**40)
        d = matrix("abc", huge, huge, huge)
        assert encode_square(3, d.values) is None
        assert check_ultrametric(d) is None  # Fraction path handles it

    def test_limit_guard(self):
        d = matrix("ab", Fraction(INT64_LIMIT + 1))
        assert encode_square(2, d.values) is None


class TestBackendSwitching:
    def test_checks_identical_across_backends(self, keep_backend):
        rng = random.Random(12)
        cases = [rand_matrix(rng, rng.randint(3, 8), hi=4) for _ in range(40)]
        results = {}
        for backend in ("numba", "numpy", "exact"):
            set_backend(backend)
            results[backend] = [
                (check_ultrametric(d), check_tree_metric(d)) for d in cases
            ]
        assert results["numba"] == results["numpy"] == results["exact"]

    def test_quadruple_witnesses_identical_across_backends(self, keep_backend):
        # a large uniform offset keeps every triangle valid, so violations
        # surface in the quadruple stage, which has its own scan order
        from treel0 import DistanceMatrix

        rng = random.Random(13)
        cases = []
        for _ in range(25):
            n = rng.randint(4, 9)
            labels = tuple(f"e{i}" for i in range(n))
            cases.append(
                DistanceMatrix.from_function(
                    labels, lambda u, v: Fraction(100 + rng.randint(0, 2))
                )
            )
        results = {}
        for backend in ("numba", "numpy", "exact"):
            set_backend(backend)
            results[backend] = [check_tree_metric(d) for d in cases]
        assert results["numba"] == results["numpy"] == results["exact"]
        assert any(
            w is not None and len(w.elements) == 4 for w in results["numba"]
        )

    def test_set_backend_rejects_unknown(self):
        with pytest.raises(ValueError):
            set_backend("cuda")

    def test_get_backend_resolves(self):
        assert get_backend() in ("numba", "numpy", "exact")
