"""Exact-rational distance matrices, the disagreement count, and verifiers.

Distances are ``fractions.Fraction`` throughout: the objective counts exact
(in)equalities between pairs, so every value that enters a comparison must be
represented exactly.  Floats are rejected at the boundary.  Matrices are
stored once per unordered pair (upper triangle in lexicographic index order),
which makes symmetry and a zero diagonal unbreakable by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterator, Mapping, Sequence

from . import _backend

ZERO = Fraction(0)


class TreeL0Error(Exception):
    """Base class for errors raised by this package."""


class FormatError(TreeL0Error):
    """Malformed or invalid external text (matrix, instance, graph, tree)."""


class LabelMismatchError(TreeL0Error):
    """Two objects that must share a label set do not."""


class SolverLimitError(TreeL0Error):
    """Instance exceeds the size limit of an exact solver."""


class InvariantError(TreeL0Error):
    """An internal postcondition failed; indicates a bug, not bad input."""


class StructureError(TreeL0Error):
    """A fitted tree lacks the structure required to extract a clustering."""


def as_rational(value) -> Fraction:
    """Coerce an int, Fraction, or decimal/fraction string to Fraction.

    Floats are refused: a float that has already rounded a distance would
    silently corrupt the disagreement count.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise FormatError(f"not a rational literal: {value!r}") from exc
    raise TypeError(f"expected an exact rational, got {type(value).__name__}")


def format_rational(value: Fraction) -> str:
    """Render exactly: terminating decimals as decimals, otherwise ``p/q``."""
    num, den = value.numerator, value.denominator
    if den == 1:
        return str(num)
    twos = 0
    d = den
    while d % 2 == 0:
        d //= 2
        twos += 1
    fives = 0
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{num}/{den}"
    digits = max(twos, fives)
    scaled = abs(num) * (10**digits // den)
    text = str(scaled).rjust(digits + 1, "0")
    sign = "-" if num < 0 else ""
    return f"{sign}{text[:-digits]}.{text[-digits:]}"


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric nonnegative rational distances over ordered, distinct labels.

    ``values[p]`` holds the entry for the p-th pair (i, j), i < j, pairs in
    lexicographic index order. The diagonal is implicitly zero.
    """

    labels: tuple[str, ...]
    values: tuple[Fraction, ...]

    def __post_init__(self):
        labels = tuple(self.labels)
        if not labels:
            raise ValueError("at least one label required")
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate labels")
        values = tuple(as_rational(v) for v in self.values)
        n = len(labels)
        if len(values) != n * (n - 1) // 2:
            raise ValueError(
                f"expected {n * (n - 1) // 2} pair values, got {len(values)}"
            )
        for v in values:
            if v < 0:
                raise ValueError(f"negative distance {v}")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return len(self.labels)

    @cached_property
    def _index(self) -> dict[str, int]:
        return {lab: i for i, lab in enumerate(self.labels)}

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise KeyError(f"unknown label {label!r}") from None

    def pair_slot(self, i: int, j: int) -> int:
        if i > j:
            i, j = j, i
        n = self.n
        return i * (2 * n - i - 1) // 2 + (j - i - 1)

    def at(self, i: int, j: int) -> Fraction:
        if i == j:
            return ZERO
        return self.values[self.pair_slot(i, j)]

    def get(self, u: str, v: str) -> Fraction:
        return self.at(self.index(u), self.index(v))

    def iter_pairs(self) -> Iterator[tuple[int, int, Fraction]]:
        idx = 0
        n = self.n
        for i in range(n - 1):
            for j in range(i + 1, n):
                yield i, j, self.values[idx]
                idx += 1

    def replace(self, updates: Mapping[tuple[int, int], Fraction]) -> "DistanceMatrix":
        """New matrix with the given (i, j) -> value overrides."""
        vals = list(self.values)
        for (i, j), v in updates.items():
            vals[self.pair_slot(i, j)] = as_rational(v)
        return DistanceMatrix(self.labels, tuple(vals))

    def distinct_values(self) -> tuple[Fraction, ...]:
        return tuple(sorted(set(self.values)))

    @classmethod
    def from_function(cls, labels: Sequence[str], fn) -> "DistanceMatrix":
        labels = tuple(labels)
        vals = []
        for i in range(len(labels) - 1):
            for j in range(i + 1, len(labels)):
                vals.append(as_rational(fn(labels[i], labels[j])))
        return cls(labels, tuple(vals))

    @classmethod
    def from_pairs(cls, labels: Sequence[str], pairs: Mapping) -> "DistanceMatrix":
        """Build from a mapping keyed by (u, v) label pairs (either order)."""
        lookup = {}
        for (u, v), val in pairs.items():
            lookup[frozenset((u, v))] = as_rational(val)

        def fn(u, v):
            return lookup[frozenset((u, v))]

        return cls.from_function(labels, fn)

    def __str__(self) -> str:
        return format_distance_matrix(self)


class UltrametricMatrix(DistanceMatrix):
    """A DistanceMatrix certified to satisfy the three-point condition."""

    @classmethod
    def certify(cls, matrix: DistanceMatrix) -> "UltrametricMatrix":
        if isinstance(matrix, cls):
            return matrix
        witness = check_ultrametric(matrix)
        if witness is not None:
            raise ValueError(f"not an ultrametric: {witness.describe()}")
        return cls(matrix.labels, matrix.values)


class TreeMetricMatrix(DistanceMatrix):
    """A DistanceMatrix certified to satisfy the four-point condition."""

    @classmethod
    def certify(cls, matrix: DistanceMatrix) -> "TreeMetricMatrix":
        if isinstance(matrix, cls):
            return matrix
        witness = check_tree_metric(matrix)
        if witness is not None:
            raise ValueError(f"not a tree metric: {witness.describe()}")
        return cls(matrix.labels, matrix.values)


@dataclass(frozen=True)
class ConstrainedInstance:
    """A distance matrix plus an anchor, a cap h, and per-element floors.

    Feasible outputs are ultrametrics U with
    ``max(lower[u], lower[v]) <= U(u, v) <= h`` for every pair.  The anchor's
    floor equals h, which pins every pair containing it to exactly h.  Floors
    may be zero (a vacuous bound); h must be positive.
    """

    matrix: DistanceMatrix
    alpha: str
    h: Fraction
    lower: Mapping[str, Fraction]

    def __post_init__(self):
        h = as_rational(self.h)
        lower = {lab: as_rational(v) for lab, v in self.lower.items()}
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "lower", lower)
        if self.alpha not in self.matrix._index:
            raise ValueError(f"anchor {self.alpha!r} not among labels")
        if h <= 0:
            raise ValueError("h must be positive")
        if set(lower) != set(self.matrix.labels):
            raise ValueError("lower bounds must cover exactly the label set")
        for lab, val in lower.items():
            if val < 0:
                raise ValueError(f"lower bound for {lab!r} is negative")
            if val > h:
                raise ValueError(f"lower bound for {lab!r} exceeds h")
        if lower[self.alpha] != h:
            raise ValueError("the anchor's lower bound must equal h")

    @property
    def labels(self) -> tuple[str, ...]:
        return self.matrix.labels

    def pair_floor(self, u: str, v: str) -> Fraction:
        return max(self.lower[u], self.lower[v])


@dataclass(frozen=True)
class MetricWitness:
    """A re-checkable certificate for a failed metric or constraint property.

    kind is one of ``ultrametric-violation``, ``four-point-violation``,
    ``constraint-violation``, ``asymmetry``, ``negative-entry``.  For
    ``four-point-violation`` with three elements, the violated condition is
    the degenerate quadruple {u, v, w, w}: the triangle inequality.  For
    four elements, ``values`` lists the six entries of the quadruple in
    lexicographic pair order.
    """

    kind: str
    elements: tuple[str, ...]
    values: tuple[Fraction, ...]

    def describe(self) -> str:
        vals = ", ".join(format_rational(v) for v in self.values)
        return f"{self.kind} at ({', '.join(self.elements)}): values {vals}"


def witness_holds(witness: MetricWitness, matrix: DistanceMatrix | None = None,
                  instance: ConstrainedInstance | None = None) -> bool:
    """Re-evaluate the named condition on the named elements.

    When ``matrix`` is given, entries are re-read from it; otherwise the
    recorded values are used.
    """
    kind = witness.kind
    els = witness.elements
    if kind in ("ultrametric-violation", "four-point-violation") and matrix is not None:
        vals = []
        for a in range(len(els) - 1):
            for b in range(a + 1, len(els)):
                vals.append(matrix.get(els[a], els[b]))
        vals = tuple(vals)
    else:
        vals = witness.values
    if kind == "ultrametric-violation":
        a, b, c = vals
        hi = max(a, b, c)
        return (a == hi) + (b == hi) + (c == hi) < 2
    if kind == "four-point-violation":
        if len(els) == 3:
            a, b, c = vals
            return 2 * max(a, b, c) > a + b + c
        duv, duw, dux, dvw, dvx, dwx = vals
        sums = sorted((duv + dwx, duw + dvx, dux + dvw), reverse=True)
        return sums[0] != sums[1]
    if kind == "constraint-violation":
        if instance is not None and matrix is not None:
            u, v = els
            val = matrix.get(u, v)
            return val < instance.pair_floor(u, v) or val > instance.h
        val, floor, cap = vals
        return val < floor or val > cap
    if kind == "asymmetry":
        a, b = vals
        return a != b
    if kind == "negative-entry":
        return vals[0] < 0
    raise ValueError(f"unknown witness kind {witness.kind!r}")


def l0_distance(a: DistanceMatrix, b: DistanceMatrix) -> int:
    """Number of unordered pairs on which the two matrices disagree."""
    if set(a.labels) != set(b.labels):
        raise LabelMismatchError("matrices are over different label sets")
    if a.labels == b.labels:
        return sum(1 for x, y in zip(a.values, b.values) if x != y)
    count = 0
    for i, j, val in a.iter_pairs():
        if val != b.get(a.labels[i], a.labels[j]):
            count += 1
    return count


def disagreements(
    a: DistanceMatrix, b: DistanceMatrix
) -> tuple[tuple[str, str, Fraction, Fraction], ...]:
    """All (u, v, a-value, b-value) pairs where the matrices differ."""
    if set(a.labels) != set(b.labels):
        raise LabelMismatchError("matrices are over different label sets")
    out = []
    for i, j, val in a.iter_pairs():
        u, v = a.labels[i], a.labels[j]
        other = b.get(u, v)
        if val != other:
            out.append((u, v, val, other))
    return tuple(out)


def _triple_witness(d: DistanceMatrix, i: int, j: int, k: int, kind: str) -> MetricWitness:
    els = (d.labels[i], d.labels[j], d.labels[k])
    return MetricWitness(kind, els, (d.at(i, j), d.at(i, k), d.at(j, k)))


def _quad_witness(d: DistanceMatrix, i: int, j: int, k: int, l: int) -> MetricWitness:
    els = (d.labels[i], d.labels[j], d.labels[k], d.labels[l])
    idx = (i, j, k, l)
    vals = []
    for a in range(3):
        for b in range(a + 1, 4):
            vals.append(d.at(idx[a], idx[b]))
    return MetricWitness("four-point-violation", els, tuple(vals))


def check_ultrametric(
    d: DistanceMatrix, tolerance: Fraction = ZERO
) -> MetricWitness | None:
    """None iff every triple's two largest pair values are equal (within
    ``tolerance``); otherwise the first violating triple in index order."""
    n = d.n
    if n < 3:
        return None
    if tolerance == 0 and _backend.get_backend() != "exact":
        enc = _backend.encode_square(n, d.values)
        if enc is not None:
            hit = _backend.find_ultra_violation(enc)
            if hit is None:
                return None
            return _triple_witness(d, *hit, kind="ultrametric-violation")
    for i in range(n - 2):
        for j in range(i + 1, n - 1):
            a = d.at(i, j)
            for k in range(j + 1, n):
                b = d.at(i, k)
                c = d.at(j, k)
                top, second = sorted((a, b, c), reverse=True)[:2]
                if top - second > tolerance:
                    return _triple_witness(d, i, j, k, kind="ultrametric-violation")
    return None


def check_tree_metric(
    d: DistanceMatrix, tolerance: Fraction = ZERO
) -> MetricWitness | None:
    """None iff d obeys the triangle inequality and, on every quadruple, the
    two largest of the three pairing sums agree (within ``tolerance``).

    Triangle violations come back first, as a three-element witness; then
    quadruples, each the first violation in index order.  Symmetry and
    nonnegativity hold by construction of DistanceMatrix.
    """
    n = d.n
    if n < 3:
        return None
    fast = tolerance == 0 and _backend.get_backend() != "exact"
    enc = _backend.encode_square(n, d.values) if fast else None
    if enc is not None:
        hit = _backend.find_triangle_violation(enc)
        if hit is not None:
            return _triple_witness(d, *hit, kind="four-point-violation")
        if n >= 4:
            hit = _backend.find_four_point_violation(enc)
            if hit is not None:
                return _quad_witness(d, *hit)
        return None
    for i in range(n - 2):
        for j in range(i + 1, n - 1):
            a = d.at(i, j)
            for k in range(j + 1, n):
                b = d.at(i, k)
                c = d.at(j, k)
                if 2 * max(a, b, c) - (a + b + c) > tolerance:
                    return _triple_witness(d, i, j, k, kind="four-point-violation")
    for i in range(n - 3):
        for j in range(i + 1, n - 2):
            for k in range(j + 1, n - 1):
                for l in range(k + 1, n):
                    s1 = d.at(i, j) + d.at(k, l)
                    s2 = d.at(i, k) + d.at(j, l)
                    s3 = d.at(i, l) + d.at(j, k)
                    top, second = sorted((s1, s2, s3), reverse=True)[:2]
                    if top - second > tolerance:
                        return _quad_witness(d, i, j, k, l)
    return None


def check_constrained(
    u: DistanceMatrix, instance: ConstrainedInstance, tolerance: Fraction = ZERO
) -> MetricWitness | None:
    """None iff u is an ultrametric and every pair sits inside its band."""
    if set(u.labels) != set(instance.labels):
        raise LabelMismatchError("matrix and instance label sets differ")
    witness = check_ultrametric(u, tolerance)
    if witness is not None:
        return witness
    for i, j, val in u.iter_pairs():
        a, b = u.labels[i], u.labels[j]
        floor = instance.pair_floor(a, b)
        if val < floor - tolerance or val > instance.h + tolerance:
            return MetricWitness(
                "constraint-violation", (a, b), (val, floor, instance.h)
            )
    return None


@dataclass(frozen=True)
class FitReport:
    """What a fit produced: cost, chosen anchor, solver, and the differing pairs."""

    cost: int
    anchor: str | None
    solver: str
    n: int
    wall_ms: float
    disagreements: tuple[tuple[str, str, Fraction, Fraction], ...]

    def __post_init__(self):
        if self.cost != len(self.disagreements):
            raise InvariantError("report cost differs from its disagreement list")

    @classmethod
    def build(
        cls,
        input_matrix: DistanceMatrix,
        output_matrix: DistanceMatrix,
        solver: str,
        anchor: str | None = None,
        wall_ms: float = 0.0,
    ) -> "FitReport":
        diffs = disagreements(input_matrix, output_matrix)
        return cls(
            cost=len(diffs),
            anchor=anchor,
            solver=solver,
            n=input_matrix.n,
            wall_ms=wall_ms,
            disagreements=diffs,
        )

    def to_text(self) -> str:
        lines = [f"cost {self.cost}"]
        if self.anchor is not None:
            lines.append(f"alpha {self.anchor}")
        lines.append(f"solver {self.solver}")
        lines.append(f"n {self.n}")
        for u, v, a, b in self.disagreements:
            lines.append(f"pair {u} {v} {format_rational(a)} {format_rational(b)}")
        return "\n".join(lines) + "\n"


# --- distance-matrix text format -------------------------------------------
#
# line 1:        n
# line 2:        n whitespace-separated labels
# lines 3..n+2:  full n x n rows of decimal (or p/q) numbers
#
# The parser insists on symmetry, a zero diagonal, and nonnegative entries.


def parse_distance_matrix(text: str) -> DistanceMatrix:
    lines = [ln for ln in (raw.strip() for raw in text.splitlines()) if ln]
    if not lines:
        raise FormatError("empty matrix file")
    try:
        n = int(lines[0])
    except ValueError as exc:
        raise FormatError(f"first line must be the element count: {lines[0]!r}") from exc
    if n < 1:
        raise FormatError("element count must be at least 1")
    if len(lines) < 2 + n:
        raise FormatError(f"expected {2 + n} lines, found {len(lines)}")
    labels = tuple(lines[1].split())
    if len(labels) != n:
        raise FormatError(f"expected {n} labels, found {len(labels)}")
    if len(set(labels)) != n:
        raise FormatError("duplicate labels")
    rows = []
    for r in range(n):
        toks = lines[2 + r].split()
        if len(toks) != n:
            raise FormatError(f"row {r + 1} has {len(toks)} entries, expected {n}")
        rows.append([as_rational(t) for t in toks])
    for i in range(n):
        if rows[i][i] != 0:
            raise FormatError(f"nonzero diagonal at {labels[i]}")
        for j in range(i + 1, n):
            if rows[i][j] != rows[j][i]:
                raise FormatError(
                    f"asymmetric entry at ({labels[i]}, {labels[j]}): "
                    f"{format_rational(rows[i][j])} vs {format_rational(rows[j][i])}"
                )
            if rows[i][j] < 0:
                raise FormatError(
                    f"negative entry at ({labels[i]}, {labels[j]}): "
                    f"{format_rational(rows[i][j])}"
                )
    vals = []
    for i in range(n - 1):
        for j in range(i + 1, n):
            vals.append(rows[i][j])
    return DistanceMatrix(labels, tuple(vals))


def format_distance_matrix(d: DistanceMatrix) -> str:
    n = d.n
    lines = [str(n), " ".join(d.labels)]
    for i in range(n):
        lines.append(" ".join(format_rational(d.at(i, j)) for j in range(n)))
    return "\n".join(lines) + "\n"
