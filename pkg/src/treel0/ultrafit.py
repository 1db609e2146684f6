"""Solvers for fitting an ultrametric to a distance matrix, minimizing the
number of disagreeing pairs, behind one pluggable solver interface.

Two solvers are provided:

* ``exact`` - a desk-scale oracle: enumerate every rooted tree shape over the
  elements and, per shape, run a bottom-up dynamic program assigning each
  internal node a height from a finite candidate grid.  The grid (distinct
  input values plus 0) loses nothing: a height that matches no input value
  serves only disagreeing pairs and can be lowered to the nearest grid value
  without breaking monotonicity or raising the cost.
* ``heuristic`` - deterministic agglomerative merging with no approximation
  guarantee, as a plug-in for instances the oracle cannot touch.

Anything implementing the same contract (valid ultrametric out, exact L0
accounting) can be slotted in where ``solve`` dispatches.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _backend
from ._enum import rooted_topologies
from .core import (
    ZERO,
    DistanceMatrix,
    InvariantError,
    SolverLimitError,
    UltrametricMatrix,
    as_rational,
    check_ultrametric,
)

_INF = 1 << 30


@dataclass(frozen=True)
class UltraSolverSpec:
    """Which solver to run and how far the exact one may be pushed."""

    kind: str = "exact"
    exact_limit: int = 6

    def __post_init__(self):
        if self.kind not in ("exact", "heuristic"):
            raise ValueError(f"unknown solver kind {self.kind!r}")
        if self.exact_limit < 1:
            raise ValueError("exact_limit must be positive")

    @property
    def claimed_rho(self) -> Fraction | None:
        """Approximation factor the solver vouches for (exact: 1)."""
        return Fraction(1) if self.kind == "exact" else None


@dataclass(frozen=True)
class Hierarchy:
    """Rooted merge tree: leaves carry labels, internal nodes carry heights.

    Heights weakly decrease from the root towards the leaves, so the matrix
    it induces (entry = height of the lowest common ancestor) is an
    ultrametric.  Internal nodes have at least two children.
    """

    label: str | None = None
    height: Fraction = ZERO
    children: tuple["Hierarchy", ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "height", as_rational(self.height))
        object.__setattr__(self, "children", tuple(self.children))
        if self.children:
            if self.label is not None:
                raise ValueError("internal nodes carry no label")
            if len(self.children) < 2:
                raise ValueError("internal nodes need at least two children")
            if self.height < 0:
                raise ValueError("heights must be nonnegative")
            for child in self.children:
                if child.height > self.height:
                    raise ValueError("child height exceeds parent height")
        else:
            if self.label is None:
                raise ValueError("leaves must carry a label")
            if self.height != 0:
                raise ValueError("leaves sit at height 0")

    def leaf_labels(self) -> tuple[str, ...]:
        if not self.children:
            return (self.label,)
        out: list[str] = []
        for child in self.children:
            out.extend(child.leaf_labels())
        return tuple(out)

    def induced_matrix(self, labels: Sequence[str] | None = None) -> UltrametricMatrix:
        """Matrix of lowest-common-ancestor heights over ``labels`` order."""
        pairs: dict[frozenset, Fraction] = {}

        def walk(node: "Hierarchy") -> list[str]:
            if not node.children:
                return [node.label]
            groups = [walk(c) for c in node.children]
            for gi in range(len(groups) - 1):
                for gj in range(gi + 1, len(groups)):
                    for a in groups[gi]:
                        for b in groups[gj]:
                            pairs[frozenset((a, b))] = node.height
            merged: list[str] = []
            for g in groups:
                merged.extend(g)
            return merged

        order = walk(self)
        if labels is None:
            labels = sorted(order)
        matrix = DistanceMatrix.from_pairs(tuple(labels), {
            tuple(fs): h for fs, h in pairs.items()
        }) if len(order) > 1 else DistanceMatrix(tuple(labels), ())
        return UltrametricMatrix(matrix.labels, matrix.values)


# --- exact solver: tree-shape enumeration + height DP -----------------------


def _flatten(topology):
    """Postorder arrays for one nested-tuple tree shape.

    Returns (order, kids, leaf_of, leafset): postorder node ids; child ids
    per internal node (empty for leaves); the element index at each leaf
    (-1 for internal); all element indices below each node.
    """
    kids: list[list[int]] = []
    leaf_of: list[int] = []
    leafset: list[list[int]] = []
    order: list[int] = []

    def walk(node) -> int:
        if isinstance(node, int):
            nid = len(kids)
            kids.append([])
            leaf_of.append(node)
            leafset.append([node])
            order.append(nid)
            return nid
        child_ids = [walk(c) for c in node]
        nid = len(kids)
        kids.append(child_ids)
        leaf_of.append(-1)
        ls: list[int] = []
        for c in child_ids:
            ls.extend(leafset[c])
        leafset.append(ls)
        order.append(nid)
        return nid

    walk(topology)
    return order, kids, leaf_of, leafset


def _dp_on_topology(topology, pair_slot, codes, leaf_floor, num_values):
    """Minimum disagreements over height assignments for one tree shape.

    ``codes[p]``: candidate index of the target value for pair slot p (or -1).
    ``leaf_floor[e]``: minimum candidate index allowed for element e's parent.
    Returns (cost, heights) where heights maps postorder node id -> candidate
    index, choosing the smallest optimal index at every node (root first).
    """
    order, kids, leaf_of, leafset = _flatten(topology)
    cost: dict[int, list[int]] = {}
    prefix: dict[int, list[int]] = {}
    argmin: dict[int, list[int]] = {}

    for nid in order:
        if not kids[nid]:
            continue
        agree = [0] * num_values
        total = 0
        floor = 0
        for ci in range(len(kids[nid]) - 1):
            for cj in range(ci + 1, len(kids[nid])):
                for a in leafset[kids[nid][ci]]:
                    for b in leafset[kids[nid][cj]]:
                        total += 1
                        code = codes[pair_slot(a, b)]
                        if code >= 0:
                            agree[code] += 1
        for c in kids[nid]:
            if leaf_of[c] >= 0:
                floor = max(floor, leaf_floor[leaf_of[c]])
        row = []
        for t in range(num_values):
            if t < floor:
                row.append(_INF)
                continue
            val = total - agree[t]
            for c in kids[nid]:
                if leaf_of[c] < 0:
                    val += prefix[c][t]
            row.append(val)
        pre = []
        arg = []
        best = _INF
        best_t = 0
        for t in range(num_values):
            if row[t] < best:
                best = row[t]
                best_t = t
            pre.append(best)
            arg.append(best_t)
        cost[nid] = row
        prefix[nid] = pre
        argmin[nid] = arg

    root = order[-1]
    root_t = argmin[root][num_values - 1]
    best_cost = prefix[root][num_values - 1]
    heights = {root: root_t}
    stack = [(root, root_t)]
    while stack:
        nid, t = stack.pop()
        for c in kids[nid]:
            if leaf_of[c] < 0:
                ct = argmin[c][t]
                heights[c] = ct
                stack.append((c, ct))
    return best_cost, heights


def _build_hierarchy(topology, heights_by_id, candidates, labels):
    order, kids, leaf_of, _ = _flatten(topology)

    built: dict[int, Hierarchy] = {}
    for nid in order:
        if not kids[nid]:
            built[nid] = Hierarchy(label=labels[leaf_of[nid]])
        else:
            built[nid] = Hierarchy(
                height=candidates[heights_by_id[nid]],
                children=tuple(built[c] for c in kids[nid]),
            )
    return built[order[-1]]


def solve_over_topologies(
    d: DistanceMatrix,
    candidates: Sequence[Fraction],
    leaf_floor_values: Sequence[Fraction] | None = None,
) -> tuple[UltrametricMatrix, Hierarchy, int]:
    """Global optimum over all tree shapes with heights on a candidate grid.

    ``leaf_floor_values[e]``, when given, forces element e's first merge to
    happen at a height >= that value; the values must appear in
    ``candidates``.  Ties between shapes break to the first shape enumerated;
    within a shape every node takes the smallest optimal height.
    """
    labels = d.labels
    n = d.n
    candidates = sorted(set(as_rational(c) for c in candidates))
    rank = {v: t for t, v in enumerate(candidates)}
    codes = [rank.get(v, -1) for v in d.values]
    if leaf_floor_values is None:
        leaf_floor = [0] * n
    else:
        leaf_floor = [rank[as_rational(v)] for v in leaf_floor_values]

    if n == 1:
        leaf = Hierarchy(label=labels[0])
        return UltrametricMatrix(labels, ()), leaf, 0

    best = None
    for topology in rooted_topologies(tuple(range(n))):
        cost, heights = _dp_on_topology(
            topology, d.pair_slot, codes, leaf_floor, len(candidates)
        )
        if best is None or cost < best[0]:
            best = (cost, topology, heights)
    cost, topology, heights = best
    if cost >= _INF:
        raise InvariantError("height grid admits no feasible assignment")
    root = _build_hierarchy(topology, heights, candidates, labels)
    matrix = root.induced_matrix(labels)
    return matrix, root, cost


def fit_ultrametric_exact(
    d: DistanceMatrix,
    exact_limit: int = 6,
    candidates: Sequence[Fraction] | None = None,
) -> UltrametricMatrix:
    """True minimizer of the disagreement count over all ultrametrics.

    Rejects instances above ``exact_limit`` elements: the number of tree
    shapes grows super-exponentially.  ``candidates`` overrides the height
    grid (diagnostics only; the default grid is already optimal).
    """
    if d.n > exact_limit:
        raise SolverLimitError(
            f"{d.n} elements exceed the exact solver limit of {exact_limit}"
        )
    if candidates is None:
        candidates = set(d.values) | {ZERO}
    matrix, _, _ = solve_over_topologies(d, tuple(candidates))
    return matrix


def fit_ultrametric_bruteforce(
    d: DistanceMatrix, limit: int = 4
) -> tuple[UltrametricMatrix, int]:
    """Independent oracle: scan every matrix over the candidate grid.

    Enumerates all |grid|^(n(n-1)/2) symmetric matrices with entries from
    the grid (distinct input values plus 0), keeps those passing the
    three-point condition, and returns a cheapest one with its cost.  Kept
    deliberately separate from the tree-shape solver so each can check the
    other.
    """
    if d.n > limit:
        raise SolverLimitError(f"{d.n} elements exceed the enumeration limit of {limit}")
    if d.n == 1:
        return UltrametricMatrix(d.labels, ()), 0
    candidates = sorted(set(d.values) | {ZERO})
    rank = {v: t for t, v in enumerate(candidates)}
    codes = np.array([rank[v] for v in d.values], dtype=np.int64)
    lo = np.zeros(len(codes), dtype=np.int64)
    triples = _pair_triples(d)
    cost, assign = _backend.best_ultrametric_assignment(
        codes, lo, triples, len(candidates)
    )
    values = tuple(candidates[t] for t in assign)
    return UltrametricMatrix(d.labels, values), cost


def _pair_triples(d: DistanceMatrix) -> np.ndarray:
    """Pair-slot index triples ((i,j), (i,k), (j,k)) for all i < j < k."""
    n = d.n
    rows = []
    for i in range(n - 2):
        for j in range(i + 1, n - 1):
            for k in range(j + 1, n):
                rows.append(
                    (d.pair_slot(i, j), d.pair_slot(i, k), d.pair_slot(j, k))
                )
    return np.array(rows, dtype=np.int64).reshape(-1, 3)


# --- heuristic solver: deterministic agglomerative merging ------------------


def fit_ultrametric_heuristic(d: DistanceMatrix) -> UltrametricMatrix:
    """Valid ultrametric with no guarantee; identity on ultrametric inputs.

    Clusters start as singletons in label order.  Each step scores every
    cluster pair by its merge height - the most common value among the
    cross-cluster entries, ties to the smaller value, raised to the taller
    child when monotonicity demands - and merges the pair whose height
    matches the most cross entries.  Ties prefer the lower height, then the
    older pair of clusters.
    """
    if check_ultrametric(d) is None:
        return UltrametricMatrix(d.labels, d.values)

    labels = d.labels
    nodes: dict[int, Hierarchy] = {
        i: Hierarchy(label=lab) for i, lab in enumerate(labels)
    }
    heights: dict[int, Fraction] = {i: ZERO for i in nodes}
    counts: dict[tuple[int, int], Counter] = {}
    for i, j, val in d.iter_pairs():
        counts[(i, j)] = Counter({val: 1})

    def stats(a: int, b: int) -> tuple[int, Fraction]:
        counter = counts[(a, b)]
        top = max(counter.values())
        plurality = min(v for v, c in counter.items() if c == top)
        eff = max(plurality, heights[a], heights[b])
        return counter.get(eff, 0), eff

    pair_stats = {key: stats(*key) for key in counts}
    alive = sorted(nodes)
    next_id = len(labels)
    while len(alive) > 1:
        best_key = None
        best_rank = None
        for key, (agree, eff) in pair_stats.items():
            rank = (-agree, eff, key)
            if best_rank is None or rank < best_rank:
                best_rank = rank
                best_key = key
        a, b = best_key
        _, eff = pair_stats[best_key]
        merged = next_id
        next_id += 1
        nodes[merged] = Hierarchy(height=eff, children=(nodes[a], nodes[b]))
        heights[merged] = eff
        alive = [x for x in alive if x not in (a, b)]
        for x in alive:
            combined = Counter(counts.pop((min(x, a), max(x, a))))
            combined.update(counts.pop((min(x, b), max(x, b))))
            counts[(x, merged)] = combined
        del counts[(a, b)]
        pair_stats = {
            key: pair_stats[key] if merged not in key else stats(*key)
            for key in counts
        }
        alive.append(merged)

    root = nodes[alive[0]] if len(labels) > 1 else nodes[0]
    return root.induced_matrix(labels)


def solve(d: DistanceMatrix, spec: UltraSolverSpec) -> UltrametricMatrix:
    """Run the named solver and certify its output."""
    if spec.kind == "exact":
        out = fit_ultrametric_exact(d, exact_limit=spec.exact_limit)
    else:
        out = fit_ultrametric_heuristic(d)
    if check_ultrametric(out) is not None:
        raise InvariantError(f"{spec.kind} solver produced a non-ultrametric")
    return out
