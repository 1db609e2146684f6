"""Command-line surface: fit, check, and generate.

Exit codes: 0 success, 1 usage/parse error (including failed checks),
2 exact-solver size limit, 3 internal invariant failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .constrained import fit_constrained, parse_constrained_instance
from .core import (
    FitReport,
    FormatError,
    InvariantError,
    SolverLimitError,
    TreeL0Error,
    as_rational,
    check_tree_metric,
    check_ultrametric,
    format_distance_matrix,
    l0_distance,
    parse_distance_matrix,
)
from .instances import gen_correlation, gen_planted, parse_graph
from .treebuild import (
    matrix_to_tree,
    parse_newick,
    serialize_newick,
    ultrametric_to_dendrogram,
)
from .treefit import fit_tree
from .ultrafit import UltraSolverSpec, solve


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treel0",
        description=(
            "Fit tree metrics and ultrametrics to a distance matrix, "
            "minimizing the number of disagreeing pairs."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_fit(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--input", required=True, help="input file")
        p.add_argument(
            "--solver", choices=("exact", "heuristic"), default="heuristic"
        )
        p.add_argument(
            "--exact-limit",
            type=int,
            default=6,
            help="element cap for the exact solver (default 6)",
        )
        p.add_argument("--output", help="write the fitted tree as Newick here")
        p.add_argument("--report", help="write the fit report here")
        return p

    add_fit("fit-tree", "fit a tree metric to a distance matrix")
    add_fit("fit-ultra", "fit an ultrametric to a distance matrix")
    add_fit("fit-constrained", "fit a constrained ultrametric to an instance file")

    p = sub.add_parser("check", help="validate a file against a metric condition")
    p.add_argument("--input", required=True)
    p.add_argument(
        "--kind", choices=("matrix", "ultrametric", "tree", "newick"), required=True
    )
    p.add_argument(
        "--tolerance",
        default="0",
        help="slack for comparisons on external data (rational, default 0)",
    )

    p = sub.add_parser("gen", help="generate an instance file")
    gen_sub = p.add_subparsers(dest="subkind", required=True)

    planted = gen_sub.add_parser("planted", help="random tree metric with k flips")
    planted.add_argument("--n", type=int, required=True)
    planted.add_argument("--k", type=int, required=True)
    planted.add_argument("--seed", type=int, required=True)
    planted.add_argument("--output", required=True)

    cc = gen_sub.add_parser("cc", help="correlation-clustering reduction of a graph")
    cc.add_argument("--input", required=True, help="graph file")
    cc.add_argument("--delta", help="positive stand-in for the zero distances")
    cc.add_argument("--vprime-size", type=int, help="override the filler size")
    cc.add_argument("--output", required=True)

    return parser


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc


def _write(path: str | None, text: str) -> None:
    if path is None:
        return
    Path(path).write_text(text)


def _cmd_fit(args) -> int:
    spec = UltraSolverSpec(kind=args.solver, exact_limit=args.exact_limit)
    if args.command == "fit-constrained":
        instance = parse_constrained_instance(_read(args.input))
        fitted, report = fit_constrained(instance, spec)
        source = instance.matrix
        tree = ultrametric_to_dendrogram(fitted)
    else:
        matrix = parse_distance_matrix(_read(args.input))
        source = matrix
        if args.command == "fit-tree":
            fitted, report = fit_tree(matrix, spec)
            tree = matrix_to_tree(fitted)
        else:
            fitted = solve(matrix, spec)
            report = FitReport.build(matrix, fitted, solver=spec.kind)
            tree = ultrametric_to_dendrogram(fitted)
    if l0_distance(source, fitted) != report.cost:
        raise InvariantError("report cost does not re-verify")
    _write(args.output, serialize_newick(tree) + "\n")
    _write(args.report, report.to_text())
    print(f"cost {report.cost}")
    return 0


def _cmd_check(args) -> int:
    tolerance = as_rational(args.tolerance)
    if tolerance < 0:
        raise FormatError("tolerance must be nonnegative")
    if args.kind == "newick":
        tree = parse_newick(_read(args.input))
        induced = tree.induced_matrix()
        again = parse_newick(serialize_newick(tree)).induced_matrix(induced.labels)
        if induced.values != again.values:
            print("newick round trip changed the induced matrix")
            return 1
        print(f"ok newick ({len(induced.labels)} elements)")
        return 0
    matrix = parse_distance_matrix(_read(args.input))
    if args.kind == "matrix":
        print(f"ok matrix ({matrix.n} elements)")
        return 0
    if args.kind == "ultrametric":
        witness = check_ultrametric(matrix, tolerance)
    else:
        witness = check_tree_metric(matrix, tolerance)
    if witness is not None:
        print(witness.describe())
        return 1
    print(f"ok {args.kind} ({matrix.n} elements)")
    return 0


def _cmd_gen(args) -> int:
    if args.subkind == "planted":
        instance = gen_planted(args.n, args.k, args.seed)
        _write(args.output, format_distance_matrix(instance.matrix))
    else:
        graph = parse_graph(_read(args.input))
        delta = as_rational(args.delta) if args.delta is not None else None
        matrix = gen_correlation(graph, delta=delta, vprime_size=args.vprime_size)
        _write(args.output, format_distance_matrix(matrix))
    print(f"wrote {args.output}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    try:
        if args.command in ("fit-tree", "fit-ultra", "fit-constrained"):
            return _cmd_fit(args)
        if args.command == "check":
            return _cmd_check(args)
        return _cmd_gen(args)
    except SolverLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InvariantError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 3
    except (FormatError, TreeL0Error, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
