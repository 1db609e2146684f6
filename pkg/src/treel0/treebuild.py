"""Explicit weighted trees: reconstruction from certified matrices,
dendrograms from ultrametrics, and Newick text in both directions.

Edge weights and therefore all induced distances are exact rationals, so a
matrix -> tree -> matrix round trip is bit-exact.  Newick output renders
each branch length as an exact decimal when it terminates and as ``p/q``
otherwise; the parser accepts both.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Mapping, Sequence

from .core import (
    ZERO,
    DistanceMatrix,
    FormatError,
    InvariantError,
    TreeMetricMatrix,
    UltrametricMatrix,
    as_rational,
    format_rational,
)


@dataclass(frozen=True)
class ExplicitTree:
    """A connected acyclic weighted graph with an element -> node map.

    Several elements may share a node; nodes with no element are auxiliary.
    Treated as immutable: operations build new trees.
    """

    num_nodes: int
    edges: tuple[tuple[int, int, Fraction], ...]
    assoc: Mapping[str, int]

    def __post_init__(self):
        edges = tuple((a, b, as_rational(w)) for a, b, w in self.edges)
        assoc = dict(self.assoc)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "assoc", assoc)
        if self.num_nodes < 1:
            raise ValueError("a tree needs at least one node")
        if len(edges) != self.num_nodes - 1:
            raise ValueError("edge count must be node count minus one")
        seen = set()
        for a, b, w in edges:
            if not (0 <= a < self.num_nodes and 0 <= b < self.num_nodes) or a == b:
                raise ValueError(f"bad edge ({a}, {b})")
            if w < 0:
                raise ValueError("edge weights must be nonnegative")
            key = (min(a, b), max(a, b))
            if key in seen:
                raise ValueError(f"duplicate edge ({a}, {b})")
            seen.add(key)
        if not assoc:
            raise ValueError("tree carries no elements")
        for lab, node in assoc.items():
            if not 0 <= node < self.num_nodes:
                raise ValueError(f"element {lab!r} mapped to missing node {node}")
        # connectivity (with the right edge count this also rules out cycles)
        reach = {0}
        frontier = [0]
        adj = self.adjacency
        while frontier:
            cur = frontier.pop()
            for nbr, _ in adj[cur]:
                if nbr not in reach:
                    reach.add(nbr)
                    frontier.append(nbr)
        if len(reach) != self.num_nodes:
            raise ValueError("tree is not connected")

    @cached_property
    def adjacency(self) -> tuple[tuple[tuple[int, Fraction], ...], ...]:
        adj: list[list[tuple[int, Fraction]]] = [[] for _ in range(self.num_nodes)]
        for a, b, w in self.edges:
            adj[a].append((b, w))
            adj[b].append((a, w))
        return tuple(tuple(x) for x in adj)

    def distances_from(self, node: int) -> list[Fraction]:
        dist: list[Fraction | None] = [None] * self.num_nodes
        dist[node] = ZERO
        stack = [node]
        while stack:
            cur = stack.pop()
            for nbr, w in self.adjacency[cur]:
                if dist[nbr] is None:
                    dist[nbr] = dist[cur] + w
                    stack.append(nbr)
        return dist  # type: ignore[return-value]

    def labels(self) -> tuple[str, ...]:
        return tuple(self.assoc)

    def induced_matrix(self, labels: Sequence[str] | None = None) -> DistanceMatrix:
        """Pairwise distances between the elements' nodes."""
        if labels is None:
            labels = self.labels()
        labels = tuple(labels)
        by_node: dict[int, list[Fraction]] = {}
        for lab in labels:
            node = self.assoc[lab]
            if node not in by_node:
                by_node[node] = self.distances_from(node)
        values = []
        for i in range(len(labels) - 1):
            row = by_node[self.assoc[labels[i]]]
            for j in range(i + 1, len(labels)):
                values.append(row[self.assoc[labels[j]]])
        return DistanceMatrix(labels, tuple(values))


class _Builder:
    """Mutable scratch tree: nodes, adjacency, and exact path surgery."""

    def __init__(self):
        self.adj: list[dict[int, Fraction]] = []
        self.assoc: dict[str, int] = {}

    @classmethod
    def from_tree(cls, tree: ExplicitTree) -> "_Builder":
        b = cls()
        for _ in range(tree.num_nodes):
            b.new_node()
        for a, c, w in tree.edges:
            b.add_edge(a, c, w)
        b.assoc.update(tree.assoc)
        return b

    def new_node(self) -> int:
        self.adj.append({})
        return len(self.adj) - 1

    def add_edge(self, a: int, b: int, w: Fraction) -> None:
        self.adj[a][b] = w
        self.adj[b][a] = w

    def remove_edge(self, a: int, b: int) -> None:
        del self.adj[a][b]
        del self.adj[b][a]

    def path(self, src: int, dst: int) -> list[int]:
        parent = {src: None}
        stack = [src]
        while stack:
            cur = stack.pop()
            if cur == dst:
                break
            for nbr in self.adj[cur]:
                if nbr not in parent:
                    parent[nbr] = cur
                    stack.append(nbr)
        out = [dst]
        while parent[out[-1]] is not None:
            out.append(parent[out[-1]])
        out.reverse()
        return out

    def point_at(self, src: int, dst: int, offset: Fraction) -> int:
        """Node at exact ``offset`` from src on the src-dst path, subdividing
        an edge if the offset falls strictly inside one."""
        nodes = self.path(src, dst)
        cum = ZERO
        for i, node in enumerate(nodes):
            if cum == offset:
                return node
            if i + 1 == len(nodes):
                break
            step = self.adj[node][nodes[i + 1]]
            if cum + step > offset:
                mid = self.new_node()
                self.remove_edge(node, nodes[i + 1])
                self.add_edge(node, mid, offset - cum)
                self.add_edge(mid, nodes[i + 1], cum + step - offset)
                return mid
            cum += step
        raise InvariantError("offset beyond path end")

    def freeze(self) -> ExplicitTree:
        edges = []
        for a in range(len(self.adj)):
            for b, w in self.adj[a].items():
                if a < b:
                    edges.append((a, b, w))
        return ExplicitTree(len(self.adj), tuple(edges), dict(self.assoc))


def matrix_to_tree(t: DistanceMatrix) -> ExplicitTree:
    """Realize a certified tree metric exactly as a weighted tree.

    Elements are inserted one at a time.  For the next element z and the
    fixed anchor x, the largest Gromov product
    ``(T(x,z) + T(x,y) - T(y,z)) / 2`` over already-placed y locates the
    point where z's pendant path leaves the current tree; the pendant length
    is the remaining distance.  Zero distances come out as shared nodes.
    """
    t = TreeMetricMatrix.certify(t)
    labels = t.labels
    b = _Builder()
    b.assoc[labels[0]] = b.new_node()
    placed = [labels[0]]
    anchor = labels[0]
    for z in labels[1:]:
        best_g = ZERO
        best_y = None
        for y in placed[1:]:
            g = (t.get(anchor, z) + t.get(anchor, y) - t.get(y, z)) / 2
            if g > best_g:
                best_g, best_y = g, y
        if best_y is None:
            attach = b.assoc[anchor]
        else:
            attach = b.point_at(b.assoc[anchor], b.assoc[best_y], best_g)
        pendant = t.get(anchor, z) - best_g
        if pendant == 0:
            b.assoc[z] = attach
        else:
            leaf = b.new_node()
            b.add_edge(attach, leaf, pendant)
            b.assoc[z] = leaf
        placed.append(z)
    tree = b.freeze()
    if tree.induced_matrix(labels).values != t.values:
        raise InvariantError("reconstructed tree does not reproduce the matrix")
    return tree


def ultrametric_to_dendrogram(u: DistanceMatrix) -> ExplicitTree:
    """Realize a certified ultrametric as a rooted tree with equidistant leaves.

    A pair at value c merges at a node c/2 above the leaf level, so leaf-to-leaf
    path lengths reproduce the matrix.  Zero-distance elements share one node.
    """
    u = UltrametricMatrix.certify(u)
    labels = u.labels
    n = u.n
    b = _Builder()

    # zero-distance classes share a node ("u ~ v iff value 0" is transitive
    # for an ultrametric)
    rep = list(range(n))

    def find(x: int) -> int:
        while rep[x] != x:
            rep[x] = rep[rep[x]]
            x = rep[x]
        return x

    for i, j, val in u.iter_pairs():
        if val == 0:
            rep[find(i)] = find(j)

    cluster_node: dict[int, int] = {}
    cluster_height: dict[int, Fraction] = {}
    for i in range(n):
        r = find(i)
        if r not in cluster_node:
            cluster_node[r] = b.new_node()
            cluster_height[r] = ZERO
        b.assoc[labels[i]] = cluster_node[r]
    # keyed by smallest member index for deterministic grouping
    clusters: dict[int, tuple[int, Fraction]] = {}
    for r in cluster_node:
        smallest = min(i for i in range(n) if find(i) == r)
        clusters[smallest] = (cluster_node[r], cluster_height[r])

    for value in u.distinct_values():
        if value == 0 or len(clusters) == 1:
            continue
        reps = sorted(clusters)
        group_rep = {r: r for r in reps}

        def gfind(x: int) -> int:
            while group_rep[x] != x:
                group_rep[x] = group_rep[group_rep[x]]
                x = group_rep[x]
            return x

        for a in range(len(reps) - 1):
            for c in range(a + 1, len(reps)):
                if u.at(reps[a], reps[c]) == value:
                    group_rep[gfind(reps[c])] = gfind(reps[a])
        groups: dict[int, list[int]] = {}
        for r in reps:
            groups.setdefault(gfind(r), []).append(r)
        for members in groups.values():
            if len(members) < 2:
                continue
            top = b.new_node()
            for r in sorted(members):
                node, height = clusters.pop(r)
                b.add_edge(top, node, value / 2 - height)
            clusters[min(members)] = (top, value / 2)

    if len(clusters) != 1:
        raise InvariantError("merging left more than one component")
    tree = b.freeze()
    if tree.induced_matrix(labels).values != u.values:
        raise InvariantError("dendrogram does not reproduce the matrix")
    return tree


# --- Newick text -------------------------------------------------------------


def serialize_newick(tree: ExplicitTree) -> str:
    """Newick with exact branch lengths.

    The tree is rooted at the node minimizing the maximum distance to any
    element (ties: nearer the lexicographically smallest element's node, then
    the smaller node id).  Elements sharing a node are emitted as zero-length
    siblings; children sort by their smallest element label; auxiliary leaves
    are unnamed.
    """
    element_nodes = sorted(set(tree.assoc.values()))
    dist_rows = {node: tree.distances_from(node) for node in element_nodes}
    anchor = tree.assoc[min(tree.assoc)]

    def key(node: int):
        ecc = max(dist_rows[e][node] for e in element_nodes)
        return (ecc, dist_rows[anchor][node], node)

    root = min(range(tree.num_nodes), key=key)

    at_node: dict[int, list[str]] = {}
    for lab, node in tree.assoc.items():
        at_node.setdefault(node, []).append(lab)

    def render(node: int, parent: int | None) -> tuple[tuple, str]:
        kids = [(nbr, w) for nbr, w in tree.adjacency[node] if nbr != parent]
        labs = sorted(at_node.get(node, ()))
        if not kids and len(labs) == 1:
            return (0, labs[0]), labs[0]
        if not kids and not labs:
            return (1, str(node)), ""
        parts = [((0, lab), f"{lab}:0") for lab in labs]
        for nbr, w in kids:
            sub_key, sub_text = render(nbr, node)
            parts.append((sub_key, f"{sub_text}:{format_rational(w)}"))
        parts.sort(key=lambda item: item[0])
        text = "(" + ",".join(p[1] for p in parts) + ")"
        best = min(p[0] for p in parts)
        return best, text

    _, body = render(root, None)
    if not body.startswith("("):
        body = f"({body}:0)"
    return body + ";"


def parse_newick(text: str) -> ExplicitTree:
    """Parse Newick; names become elements (internal names allowed)."""
    structural = "(),:;"
    tokens: list[str] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in structural:
            tokens.append(ch)
            i += 1
            continue
        j = i
        while j < len(text) and not text[j].isspace() and text[j] not in structural:
            j += 1
        tokens.append(text[i:j])
        i = j
    if not tokens or tokens[-1] != ";":
        raise FormatError("Newick text must end with ';'")

    b = _Builder()
    pos = 0

    def peek() -> str | None:
        return tokens[pos] if pos < len(tokens) else None

    def take() -> str:
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        return tok

    def name_here() -> str | None:
        tok = peek()
        if tok is not None and tok not in structural:
            return take()
        return None

    def length_here() -> Fraction:
        if peek() == ":":
            take()
            tok = peek()
            if tok is None or tok in structural:
                raise FormatError("':' must be followed by a branch length")
            val = as_rational(take())
            if val < 0:
                raise FormatError("negative branch length")
            return val
        return ZERO

    def associate(name: str, node: int) -> None:
        if name in b.assoc:
            raise FormatError(f"duplicate element name {name!r}")
        b.assoc[name] = node

    def subtree() -> int:
        if peek() == "(":
            take()
            node = b.new_node()
            while True:
                child = subtree()
                b.add_edge(node, child, length_here())
                tok = take()
                if tok == ",":
                    continue
                if tok == ")":
                    break
                raise FormatError(f"expected ',' or ')', got {tok!r}")
            name = name_here()
            if name:
                associate(name, node)
            return node
        node = b.new_node()
        name = name_here()
        if name:
            associate(name, node)
        return node

    subtree()
    length_here()  # a root-level length is legal and means nothing
    if take() != ";":
        raise FormatError("trailing content after the root subtree")
    if pos != len(tokens):
        raise FormatError("content after ';'")
    if not b.assoc:
        raise FormatError("tree carries no elements")
    return b.freeze()
