import random
from fractions import Fraction

import pytest

from treel0 import ConstrainedInstance, DistanceMatrix
from treel0._backend import get_backend, set_backend


def matrix(labels, *values):
    return DistanceMatrix(tuple(labels), tuple(Fraction(v) for v in values))


def rand_matrix(rng: random.Random, n: int, lo: int = 0, hi: int = 8) -> DistanceMatrix:
    labels = tuple(f"e{i}" for i in range(n))
    values = tuple(Fraction(rng.randint(lo, hi)) for _ in range(n * (n - 1) // 2))
    return DistanceMatrix(labels, values)


def rand_constrained(seed: int, n: int = 4) -> ConstrainedInstance:
    rng = random.Random(seed)
    d = rand_matrix(rng, n)
    h = Fraction(rng.randint(2, 8))
    alpha = d.labels[rng.randrange(n)]
    lower = {lab: Fraction(rng.randint(0, int(h))) for lab in d.labels}
    lower[alpha] = h
    return ConstrainedInstance(d, alpha, h, lower)


@pytest.fixture
def keep_backend():
    """Restore the kernel backend after a test that switches it."""
    before = get_backend()
    yield
    set_backend(before)
