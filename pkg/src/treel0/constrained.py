"""Clamping a matrix into a constraint band, and fitting constrained
ultrametrics through an unconstrained solver.

The pipeline: clamp the input into the band, fit an ordinary ultrametric to
the clamped matrix with any solver, clamp the result.  Clamping an
ultrametric preserves ultrametricity (raising each element's pairs to its
floor one element at a time never creates a violating triple, and capping at
h cannot either), so the output is always feasible; with an optimal
subsolver its cost is at most twice the constrained optimum.  The clamp is
computed in closed form here and the feasibility claim is asserted outright.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _backend
from .core import (
    ConstrainedInstance,
    DistanceMatrix,
    FitReport,
    InvariantError,
    LabelMismatchError,
    SolverLimitError,
    UltrametricMatrix,
    as_rational,
    check_constrained,
    check_ultrametric,
    format_distance_matrix,
    format_rational,
    parse_distance_matrix,
    FormatError,
)
from .ultrafit import (
    UltraSolverSpec,
    _pair_triples,
    solve,
    solve_over_topologies,
)


@dataclass(frozen=True)
class SqueezedMatrix:
    """A matrix clamped entrywise into its instance's constraint band."""

    matrix: DistanceMatrix
    source: ConstrainedInstance


def squeeze(a: DistanceMatrix, instance: ConstrainedInstance) -> SqueezedMatrix:
    """Entrywise min(h, max(value, floor_u, floor_v)); idempotent."""
    if set(a.labels) != set(instance.labels):
        raise LabelMismatchError("matrix and instance label sets differ")
    values = []
    for i, j, val in a.iter_pairs():
        floor = instance.pair_floor(a.labels[i], a.labels[j])
        values.append(min(instance.h, max(val, floor)))
    return SqueezedMatrix(DistanceMatrix(a.labels, tuple(values)), instance)


def squeeze_ultrametric(
    u: DistanceMatrix, instance: ConstrainedInstance
) -> UltrametricMatrix:
    """Clamp an ultrametric into the band; the result stays an ultrametric."""
    witness = check_ultrametric(u)
    if witness is not None:
        raise ValueError(f"input is not an ultrametric: {witness.describe()}")
    clamped = squeeze(u, instance).matrix
    witness = check_constrained(clamped, instance)
    if witness is not None:
        raise InvariantError(
            f"clamped ultrametric failed feasibility: {witness.describe()}"
        )
    return UltrametricMatrix(clamped.labels, clamped.values)


def fit_constrained(
    instance: ConstrainedInstance, spec: UltraSolverSpec
) -> tuple[UltrametricMatrix, FitReport]:
    """Clamp, solve unconstrained, clamp again.

    With an optimal subsolver the result costs at most twice the constrained
    optimum; with the heuristic it is merely feasible.
    """
    start = time.perf_counter()
    s_d = squeeze(instance.matrix, instance)
    u = solve(s_d.matrix, spec)
    s_u = squeeze_ultrametric(u, instance)
    wall_ms = (time.perf_counter() - start) * 1e3
    report = FitReport.build(
        instance.matrix, s_u, solver=spec.kind, wall_ms=wall_ms
    )
    return s_u, report


def _constrained_candidates(instance: ConstrainedInstance) -> list[Fraction]:
    s_d = squeeze(instance.matrix, instance).matrix
    grid = set(s_d.values)
    grid.update(instance.lower.values())
    grid.add(instance.h)
    return sorted(grid)


def fit_constrained_exact(
    instance: ConstrainedInstance, method: str = "dp"
) -> UltrametricMatrix:
    """True minimizer of the disagreement count over feasible ultrametrics.

    ``dp`` (up to 6 elements) enumerates tree shapes with each element's
    first merge forced to its floor and the grid capped at h.  ``enumerate``
    (up to 4) scans raw matrices over the same grid.  The two are independent
    and cross-check each other.  The grid - clamped input values, all floors,
    and h - is exhaustive: any feasible height off the grid matches no input
    value, and lowering it to the next grid value keeps every floor (floors
    are on the grid) and never raises the cost.
    """
    d = instance.matrix
    candidates = _constrained_candidates(instance)
    if method == "dp":
        if d.n > 6:
            raise SolverLimitError(f"{d.n} elements exceed the limit of 6")
        floors = [instance.lower[lab] for lab in d.labels]
        matrix, _, _ = solve_over_topologies(d, candidates, floors)
    elif method == "enumerate":
        if d.n > 4:
            raise SolverLimitError(f"{d.n} elements exceed the limit of 4")
        rank = {v: t for t, v in enumerate(candidates)}
        codes = np.array([rank.get(v, -1) for v in d.values], dtype=np.int64)
        lo = []
        for i, j, _ in d.iter_pairs():
            lo.append(rank[instance.pair_floor(d.labels[i], d.labels[j])])
        cost, assign = _backend.best_ultrametric_assignment(
            codes,
            np.array(lo, dtype=np.int64),
            _pair_triples(d),
            len(candidates),
        )
        matrix = DistanceMatrix(d.labels, tuple(candidates[t] for t in assign))
    else:
        raise ValueError(f"unknown method {method!r}")
    witness = check_constrained(matrix, instance)
    if witness is not None:
        raise InvariantError(f"exact output infeasible: {witness.describe()}")
    return UltrametricMatrix(matrix.labels, matrix.values)


# --- constrained-instance text format ---------------------------------------
#
# The distance-matrix format, followed by:
#   alpha <label>
#   h <number>
#   <label> <number>     (one floor per element, any order, all present)


def parse_constrained_instance(text: str) -> ConstrainedInstance:
    lines = [ln for ln in (raw.strip() for raw in text.splitlines()) if ln]
    if not lines:
        raise FormatError("empty instance file")
    try:
        n = int(lines[0])
    except ValueError as exc:
        raise FormatError(f"first line must be the element count: {lines[0]!r}") from exc
    matrix = parse_distance_matrix("\n".join(lines[: n + 2]))
    rest = lines[n + 2 :]
    if len(rest) != 2 + n:
        raise FormatError(f"expected alpha, h, and {n} floor lines after the matrix")
    alpha_tok = rest[0].split()
    if len(alpha_tok) != 2 or alpha_tok[0] != "alpha":
        raise FormatError(f"expected 'alpha <label>', got {rest[0]!r}")
    h_tok = rest[1].split()
    if len(h_tok) != 2 or h_tok[0] != "h":
        raise FormatError(f"expected 'h <number>', got {rest[1]!r}")
    lower = {}
    for line in rest[2:]:
        toks = line.split()
        if len(toks) != 2:
            raise FormatError(f"expected '<label> <number>', got {line!r}")
        if toks[0] in lower:
            raise FormatError(f"duplicate floor for {toks[0]!r}")
        lower[toks[0]] = as_rational(toks[1])
    try:
        return ConstrainedInstance(
            matrix=matrix,
            alpha=alpha_tok[1],
            h=as_rational(h_tok[1]),
            lower=lower,
        )
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def format_constrained_instance(instance: ConstrainedInstance) -> str:
    out = [format_distance_matrix(instance.matrix).rstrip("\n")]
    out.append(f"alpha {instance.alpha}")
    out.append(f"h {format_rational(instance.h)}")
    for lab in instance.labels:
        out.append(f"{lab} {format_rational(instance.lower[lab])}")
    return "\n".join(out) + "\n"
