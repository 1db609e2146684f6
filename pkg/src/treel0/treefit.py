"""From tree metrics to constrained ultrametrics and back.

Fix an anchor element a and let m be the largest input distance from a.  The
anchored quasimetric C(u, v) = 2m - D(a, u) - D(a, v) translates between the
two worlds: adding C to an a-restricted tree metric (one agreeing with D on
every pair containing a) gives an ultrametric whose pairs sit in the band
[max(floor_u, floor_v), 2m] with floor_u = 2m - 2 D(a, u), and subtracting C
inverts it.  The translation shifts each pair by the same amount, so
disagreement counts carry over unchanged.

``fit_tree`` tries every anchor: restrict, fit a constrained ultrametric via
the band pipeline, translate back, and keep the cheapest tree.  Restricting
to some anchor costs at most a factor 3 over the unrestricted optimum (pairs
of elements that already agree with D through the best anchor keep their
distances; the few that do not can each spoil at most n - 1 pairs), and the
band pipeline at most doubles on top of its subsolver, hence 6x overall with
an optimal subsolver.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .constrained import fit_constrained
from .core import (
    ConstrainedInstance,
    DistanceMatrix,
    FitReport,
    InvariantError,
    TreeMetricMatrix,
    UltrametricMatrix,
    as_rational,
    check_tree_metric,
    check_ultrametric,
    l0_distance,
)
from .treebuild import ExplicitTree, _Builder
from .ultrafit import UltraSolverSpec


@dataclass(frozen=True)
class CentroidQuasimetric:
    """Pair values of the form (length_u + length_v) / 2.

    Lengths may be negative in general.  The anchored construction
    (``from_anchor``) uses length_u = 2m - 2 D(anchor, u), which is always
    nonnegative and doubles as the per-element floor of the matching
    constrained instance.
    """

    lengths: Mapping[str, Fraction]
    alpha: str | None = None
    m_alpha: Fraction | None = None

    def __post_init__(self):
        object.__setattr__(
            self, "lengths", {k: as_rational(v) for k, v in self.lengths.items()}
        )
        if self.m_alpha is not None:
            object.__setattr__(self, "m_alpha", as_rational(self.m_alpha))

    def entry(self, u: str, v: str) -> Fraction:
        return (self.lengths[u] + self.lengths[v]) / 2

    @classmethod
    def from_anchor(cls, d: DistanceMatrix, alpha: str) -> "CentroidQuasimetric":
        if d.n < 2:
            raise ValueError("need at least two elements")
        ai = d.index(alpha)
        m = max(d.at(ai, u) for u in range(d.n) if u != ai)
        if m == 0:
            raise ValueError(f"degenerate anchor {alpha!r}: all its distances are 0")
        lengths = {lab: 2 * m - 2 * d.get(alpha, lab) for lab in d.labels}
        return cls(lengths=lengths, alpha=alpha, m_alpha=m)

    def to_matrix(self, labels) -> DistanceMatrix:
        """Entries as a matrix; valid only when all entries are nonnegative."""
        return DistanceMatrix.from_function(labels, self.entry)


def centroid_quasimetric(d: DistanceMatrix, alpha: str) -> CentroidQuasimetric:
    """The anchored quasimetric of (d, alpha)."""
    return CentroidQuasimetric.from_anchor(d, alpha)


@dataclass(frozen=True)
class AlphaRestrictedCertificate:
    """Per-element gaps |T(anchor, u) - D(anchor, u)|; all zero means the
    tree agrees with the input on every pair containing the anchor."""

    alpha: str
    residuals: Mapping[str, Fraction]

    @property
    def is_restricted(self) -> bool:
        return all(r == 0 for r in self.residuals.values())


def restriction_certificate(
    t: DistanceMatrix, d: DistanceMatrix, alpha: str
) -> AlphaRestrictedCertificate:
    """Measure how far ``t`` is from agreeing with ``d`` at the anchor."""
    residuals = {
        lab: abs(t.get(alpha, lab) - d.get(alpha, lab))
        for lab in d.labels
        if lab != alpha
    }
    return AlphaRestrictedCertificate(alpha=alpha, residuals=residuals)


def add_quasimetric(d: DistanceMatrix, q: CentroidQuasimetric) -> DistanceMatrix:
    values = []
    for i, j, val in d.iter_pairs():
        out = val + q.entry(d.labels[i], d.labels[j])
        if out < 0:
            raise ValueError("sum has a negative entry")
        values.append(out)
    return DistanceMatrix(d.labels, tuple(values))


def subtract_quasimetric(d: DistanceMatrix, q: CentroidQuasimetric) -> DistanceMatrix:
    values = []
    for i, j, val in d.iter_pairs():
        out = val - q.entry(d.labels[i], d.labels[j])
        if out < 0:
            raise ValueError("difference has a negative entry")
        values.append(out)
    return DistanceMatrix(d.labels, tuple(values))


def restricted_instance(d: DistanceMatrix, alpha: str) -> ConstrainedInstance:
    """The constrained instance whose feasible set mirrors the anchor-restricted
    trees of (d, alpha): matrix d + C, cap 2m, floors = the quasimetric lengths.

    The anchor's floor equals the cap by construction; elements realizing m
    get floor 0, a vacuous bound.
    """
    quasi = CentroidQuasimetric.from_anchor(d, alpha)
    return ConstrainedInstance(
        matrix=add_quasimetric(d, quasi),
        alpha=alpha,
        h=2 * quasi.m_alpha,
        lower=dict(quasi.lengths),
    )


def _check_band(u: DistanceMatrix, quasi: CentroidQuasimetric) -> None:
    cap = 2 * quasi.m_alpha
    for i, j, val in u.iter_pairs():
        a, b = u.labels[i], u.labels[j]
        floor = max(quasi.lengths[a], quasi.lengths[b])
        if val < floor or val > cap:
            raise ValueError(
                f"pair ({a}, {b}) = {val} outside the band [{floor}, {cap}]"
            )


def constrained_to_tree(
    u: DistanceMatrix, quasi: CentroidQuasimetric
) -> TreeMetricMatrix:
    """Translate a constrained ultrametric into its anchor-restricted tree."""
    if quasi.alpha is None:
        raise ValueError("anchored quasimetric required")
    witness = check_ultrametric(u)
    if witness is not None:
        raise ValueError(f"input is not an ultrametric: {witness.describe()}")
    _check_band(u, quasi)
    t = subtract_quasimetric(u, quasi)
    witness = check_tree_metric(t)
    if witness is not None:
        raise InvariantError(f"translated matrix not a tree metric: {witness.describe()}")
    for lab in t.labels:
        if lab == quasi.alpha:
            continue
        expected = quasi.m_alpha - quasi.lengths[lab] / 2
        if t.get(quasi.alpha, lab) != expected:
            raise InvariantError("translated tree is not anchor-restricted")
    return TreeMetricMatrix(t.labels, t.values)


def tree_to_constrained(
    t: DistanceMatrix, quasi: CentroidQuasimetric
) -> UltrametricMatrix:
    """Translate an anchor-restricted tree metric into its constrained ultrametric."""
    if quasi.alpha is None:
        raise ValueError("anchored quasimetric required")
    t = TreeMetricMatrix.certify(t)
    for lab in t.labels:
        if lab == quasi.alpha:
            continue
        expected = quasi.m_alpha - quasi.lengths[lab] / 2
        if t.get(quasi.alpha, lab) != expected:
            raise ValueError(f"input tree is not {quasi.alpha}-restricted at {lab!r}")
    u = add_quasimetric(t, quasi)
    witness = check_ultrametric(u)
    if witness is not None:
        raise InvariantError(f"translated matrix not an ultrametric: {witness.describe()}")
    try:
        _check_band(u, quasi)
    except ValueError as exc:
        raise InvariantError(str(exc)) from exc
    return UltrametricMatrix(u.labels, u.values)


def alpha_restrict(tree: ExplicitTree, d: DistanceMatrix, alpha: str) -> ExplicitTree:
    """Move each element so its tree distance from the anchor matches d.

    Elements too far from the anchor slide towards it along their path
    (subdividing an edge when the exact point is mid-edge); elements too
    close get a new pendant leaf making up the difference.  Nodes left
    behind stay in place as auxiliaries, so distances between untouched
    elements are preserved.
    """
    if alpha not in tree.assoc:
        raise ValueError(f"anchor {alpha!r} not in the tree")
    b = _Builder.from_tree(tree)
    anode = b.assoc[alpha]
    for u in d.labels:
        if u == alpha:
            continue
        unode = b.assoc[u]
        target = d.get(alpha, u)
        nodes = b.path(anode, unode)
        current = sum(
            b.adj[nodes[i]][nodes[i + 1]] for i in range(len(nodes) - 1)
        )
        if current == target:
            continue
        if current > target:
            b.assoc[u] = b.point_at(anode, unode, target)
        else:
            leaf = b.new_node()
            b.add_edge(unode, leaf, target - current)
            b.assoc[u] = leaf
    return b.freeze()


def fit_tree(
    d: DistanceMatrix, spec: UltraSolverSpec
) -> tuple[TreeMetricMatrix, FitReport]:
    """Fit a tree metric to d by trying every anchor and keeping the best.

    Per anchor: build the restricted instance, fit a constrained ultrametric
    through the band pipeline, translate back to a tree.  Ties in cost break
    to the earliest anchor in label order; a cost of 0 cannot be beaten, so
    the loop stops there.  Anchors whose distances are all zero contribute
    nothing and are skipped; if every anchor is degenerate the matrix is
    identically zero and is its own optimal tree.
    """
    start = time.perf_counter()
    labels = d.labels
    if d.n == 1:
        matrix = TreeMetricMatrix(labels, ())
        return matrix, FitReport.build(d, matrix, solver=spec.kind, anchor=labels[0])

    best_cost: int | None = None
    best_matrix: TreeMetricMatrix | None = None
    best_anchor: str | None = None
    for alpha in labels:
        ai = d.index(alpha)
        if all(d.at(ai, u) == 0 for u in range(d.n) if u != ai):
            continue
        quasi = centroid_quasimetric(d, alpha)
        instance = restricted_instance(d, alpha)
        s_u, _ = fit_constrained(instance, spec)
        t_alpha = constrained_to_tree(s_u, quasi)
        cost = l0_distance(t_alpha, d)
        if cost != l0_distance(s_u, instance.matrix):
            raise InvariantError("translation changed the disagreement count")
        if best_cost is None or cost < best_cost:
            best_cost, best_matrix, best_anchor = cost, t_alpha, alpha
        if best_cost == 0:
            break

    if best_matrix is None:
        # every anchor degenerate: the matrix is identically zero
        best_matrix = TreeMetricMatrix(labels, d.values)
        best_anchor = labels[0]

    wall_ms = (time.perf_counter() - start) * 1e3
    report = FitReport.build(
        d, best_matrix, solver=spec.kind, anchor=best_anchor, wall_ms=wall_ms
    )
    return best_matrix, report
