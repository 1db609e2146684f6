"""Instance generators with known optima or bounds, and clustering oracles.

Randomness always flows through an explicitly seeded ``random.Random``
(CPython's Mersenne Twister, whose methods are stable across versions), so
a seed pins every generated byte.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Sequence

from ._enum import iter_set_partitions
from .core import (
    ZERO,
    DistanceMatrix,
    FormatError,
    SolverLimitError,
    StructureError,
    TreeMetricMatrix,
    as_rational,
)
from .treebuild import ExplicitTree
from .ultrafit import Hierarchy


@dataclass(frozen=True)
class Graph:
    """Unweighted undirected graph over ordered, distinct vertex labels."""

    vertices: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]

    def __post_init__(self):
        vertices = tuple(self.vertices)
        if len(set(vertices)) != len(vertices):
            raise ValueError("duplicate vertices")
        index = {v: i for i, v in enumerate(vertices)}
        seen = set()
        normalized = []
        for u, v in self.edges:
            if u not in index or v not in index:
                raise ValueError(f"edge ({u!r}, {v!r}) uses unknown vertices")
            if u == v:
                raise ValueError(f"self-loop at {u!r}")
            if index[u] > index[v]:
                u, v = v, u
            if (u, v) in seen:
                raise ValueError(f"duplicate edge ({u!r}, {v!r})")
            seen.add((u, v))
            normalized.append((u, v))
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "edges", tuple(normalized))

    @property
    def n(self) -> int:
        return len(self.vertices)

    def has_edge(self, u: str, v: str) -> bool:
        return (u, v) in self._edge_set or (v, u) in self._edge_set

    @cached_property
    def _edge_set(self) -> frozenset:
        return frozenset(self.edges)


def cc_cost(graph: Graph, partition: Sequence[Sequence[str]]) -> int:
    """Cut edges plus same-cluster non-edges of the given partition."""
    cluster_of = {}
    for ci, part in enumerate(partition):
        for v in part:
            if v in cluster_of:
                raise ValueError(f"vertex {v!r} appears twice in the partition")
            cluster_of[v] = ci
    if set(cluster_of) != set(graph.vertices):
        raise ValueError("partition does not cover the vertex set")
    cost = 0
    verts = graph.vertices
    for i in range(len(verts) - 1):
        for j in range(i + 1, len(verts)):
            same = cluster_of[verts[i]] == cluster_of[verts[j]]
            edge = graph.has_edge(verts[i], verts[j])
            if edge != same:
                cost += 1
    return cost


def cc_bruteforce(graph: Graph) -> tuple[int, tuple[tuple[str, ...], ...]]:
    """Exact minimum over all partitions; first optimum in enumeration order."""
    if graph.n > 10:
        raise SolverLimitError(f"{graph.n} vertices exceed the enumeration limit of 10")
    best = None
    for partition in iter_set_partitions(graph.vertices):
        cost = cc_cost(graph, partition)
        if best is None or cost < best[0]:
            best = (cost, partition)
    return best


# --- planted noisy tree metrics ----------------------------------------------


def random_tree(
    labels: Sequence[str], rng: random.Random, weight_range: tuple[int, int] = (1, 8)
) -> ExplicitTree:
    """Random recursive tree: node i attaches to a uniform earlier node with
    a uniform integer weight from ``weight_range``."""
    labels = tuple(labels)
    edges = []
    for i in range(1, len(labels)):
        parent = rng.randrange(i)
        weight = Fraction(rng.randint(*weight_range))
        edges.append((parent, i, weight))
    return ExplicitTree(len(labels), tuple(edges), {lab: i for i, lab in enumerate(labels)})


def random_hierarchy(
    labels: Sequence[str], rng: random.Random, max_step: int = 8
) -> Hierarchy:
    """Random merge tree with rational heights (integer or half-integer
    increments, possibly zero)."""
    nodes = [Hierarchy(label=lab) for lab in labels]
    heights = [ZERO] * len(nodes)
    while len(nodes) > 1:
        count = rng.randint(2, min(3, len(nodes)))
        picked = []
        picked_h = []
        for _ in range(count):
            at = rng.randrange(len(nodes))
            picked.append(nodes.pop(at))
            picked_h.append(heights.pop(at))
        step = Fraction(rng.randint(0, max_step), rng.choice((1, 2)))
        height = max(picked_h) + step
        nodes.append(Hierarchy(height=height, children=tuple(picked)))
        heights.append(height)
    return nodes[0]


@dataclass(frozen=True)
class PlantedInstance:
    """A tree metric with exactly ``k`` pairs overwritten by foreign values."""

    matrix: DistanceMatrix
    planted: TreeMetricMatrix
    flipped: frozenset
    seed: int


def gen_planted(n: int, k: int, seed: int) -> PlantedInstance:
    """Random tree metric on labels e0..e{n-1} with k planted disagreements.

    The flipped pairs are chosen uniformly; each gets a uniform integer in
    0..16 resampled until it differs from the planted value, so the planted
    tree disagrees with the matrix on exactly k pairs.
    """
    if n < 1:
        raise ValueError("n must be positive")
    pair_count = n * (n - 1) // 2
    if not 0 <= k <= pair_count:
        raise ValueError(f"k must lie in [0, {pair_count}]")
    rng = random.Random(seed)
    labels = tuple(f"e{i}" for i in range(n))
    tree = random_tree(labels, rng)
    planted = TreeMetricMatrix.certify(tree.induced_matrix(labels))
    slots = rng.sample(range(pair_count), k)
    values = list(planted.values)
    flipped = []
    pair_labels = [
        (labels[i], labels[j]) for i in range(n - 1) for j in range(i + 1, n)
    ]
    for slot in sorted(slots):
        fresh = Fraction(rng.randint(0, 16))
        while fresh == values[slot]:
            fresh = Fraction(rng.randint(0, 16))
        values[slot] = fresh
        flipped.append(pair_labels[slot])
    matrix = DistanceMatrix(labels, tuple(values))
    return PlantedInstance(matrix, planted, frozenset(flipped), seed)


# --- correlation-clustering reduction ----------------------------------------


def _filler_labels(graph: Graph, count: int) -> tuple[str, ...]:
    prefix = "x"
    while any(v.startswith(prefix) and v[len(prefix):].isdigit() for v in graph.vertices):
        prefix += "x"
    return tuple(f"{prefix}{i}" for i in range(count))


def gen_correlation(
    graph: Graph,
    delta: Fraction | None = None,
    vprime_size: int | None = None,
) -> DistanceMatrix:
    """Distance matrix whose optimal tree-fitting cost equals the graph's
    optimal correlation-clustering cost.

    Adjacent vertices sit at distance 0, non-adjacent at 2, and a bulk of
    2 * C(n, 2) filler elements sit at 0 from each other and 1 from every
    vertex; the filler is heavy enough that any good tree must keep it
    together, which forces a clustering structure.  ``delta`` substitutes a
    small positive value for the zeros; ``vprime_size`` overrides the filler
    count.
    """
    if graph.n < 2:
        raise ValueError("need at least two vertices")
    zero = as_rational(delta) if delta is not None else ZERO
    if zero < 0 or zero >= 1:
        raise ValueError("delta must lie in [0, 1)")
    count = 2 * (graph.n * (graph.n - 1) // 2) if vprime_size is None else vprime_size
    if count < 1:
        raise ValueError("filler size must be positive")
    filler = _filler_labels(graph, count)
    labels = graph.vertices + filler
    vset = set(graph.vertices)

    def entry(u: str, v: str) -> Fraction:
        u_real = u in vset
        v_real = v in vset
        if u_real and v_real:
            return zero if graph.has_edge(u, v) else Fraction(2)
        if not u_real and not v_real:
            return zero
        return Fraction(1)

    return DistanceMatrix.from_function(labels, entry)


def clustering_to_tree(
    graph: Graph,
    partition: Sequence[Sequence[str]],
    delta: Fraction | None = None,
    vprime_size: int | None = None,
) -> TreeMetricMatrix:
    """The tree metric a clustering induces on the reduction's label set.

    Star layout: one hub per cluster at distance 1 from the filler's hub.
    With delta = 0 its disagreements against ``gen_correlation(graph)`` are
    exactly the partition's clustering cost.  With delta > 0 the multi-element
    groups become little stars of radius delta/2, which additionally disagrees
    on every separated non-adjacent pair (their distance becomes 2 - delta).
    """
    zero = as_rational(delta) if delta is not None else ZERO
    if zero < 0 or zero >= 1:
        raise ValueError("delta must lie in [0, 1)")
    cluster_of = {}
    for ci, part in enumerate(partition):
        for v in part:
            if v in cluster_of:
                raise ValueError(f"vertex {v!r} appears twice in the partition")
            cluster_of[v] = ci
    if set(cluster_of) != set(graph.vertices):
        raise ValueError("partition does not cover the vertex set")
    count = 2 * (graph.n * (graph.n - 1) // 2) if vprime_size is None else vprime_size
    filler = _filler_labels(graph, count)
    labels = graph.vertices + filler
    vset = set(graph.vertices)

    def entry(u: str, v: str) -> Fraction:
        u_real = u in vset
        v_real = v in vset
        if u_real and v_real:
            if cluster_of[u] == cluster_of[v]:
                return zero
            return 2 - zero
        if not u_real and not v_real:
            return zero
        return Fraction(1)

    return TreeMetricMatrix.certify(DistanceMatrix.from_function(labels, entry))


def tree_to_clustering(
    t: DistanceMatrix, graph: Graph, vprime_size: int | None = None
) -> tuple[tuple[tuple[str, ...], ...], int]:
    """Read a clustering back off a tree fitted to ``gen_correlation(graph)``.

    Requires the structure every near-optimal tree has: the filler elements
    pairwise at 0 and every vertex exactly at 1 from them.  Vertices closer
    than 2 to each other are then grouped; the grouping must come out
    transitive.  Raises StructureError when the tree is too far gone for the
    extraction to mean anything.
    """
    count = 2 * (graph.n * (graph.n - 1) // 2) if vprime_size is None else vprime_size
    filler = _filler_labels(graph, count)
    expected = set(graph.vertices) | set(filler)
    if set(t.labels) != expected:
        raise ValueError("tree labels do not match the reduction's label set")
    for i in range(len(filler) - 1):
        for j in range(i + 1, len(filler)):
            if t.get(filler[i], filler[j]) != 0:
                raise StructureError("filler elements are not co-located")
    for v in graph.vertices:
        if t.get(v, filler[0]) != 1:
            raise StructureError(f"vertex {v!r} is not at distance 1 from the filler")
    verts = graph.vertices
    rep = {v: v for v in verts}

    def find(v: str) -> str:
        while rep[v] != v:
            rep[v] = rep[rep[v]]
            v = rep[v]
        return v

    for i in range(len(verts) - 1):
        for j in range(i + 1, len(verts)):
            if t.get(verts[i], verts[j]) < 2:
                rep[find(verts[j])] = find(verts[i])
    for i in range(len(verts) - 1):
        for j in range(i + 1, len(verts)):
            same = find(verts[i]) == find(verts[j])
            if same != (t.get(verts[i], verts[j]) < 2):
                raise StructureError("closeness between vertices is not transitive")
    groups: dict[str, list[str]] = {}
    for v in verts:
        groups.setdefault(find(v), []).append(v)
    partition = tuple(tuple(g) for g in groups.values())
    return partition, cc_cost(graph, partition)


# --- graph text format --------------------------------------------------------
#
# line 1:   n
# line 2:   n whitespace-separated vertex labels
# rest:     one edge per line as two labels


def parse_graph(text: str) -> Graph:
    lines = [ln for ln in (raw.strip() for raw in text.splitlines()) if ln]
    if not lines:
        raise FormatError("empty graph file")
    try:
        n = int(lines[0])
    except ValueError as exc:
        raise FormatError(f"first line must be the vertex count: {lines[0]!r}") from exc
    if len(lines) < 2:
        raise FormatError("missing vertex label line")
    vertices = tuple(lines[1].split())
    if len(vertices) != n:
        raise FormatError(f"expected {n} vertices, found {len(vertices)}")
    edges = []
    for line in lines[2:]:
        toks = line.split()
        if len(toks) != 2:
            raise FormatError(f"expected '<label> <label>', got {line!r}")
        edges.append((toks[0], toks[1]))
    try:
        return Graph(vertices, tuple(edges))
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def format_graph(graph: Graph) -> str:
    lines = [str(graph.n), " ".join(graph.vertices)]
    for u, v in graph.edges:
        lines.append(f"{u} {v}")
    return "\n".join(lines) + "\n"
