"""Acceptance suite: one test per criterion, exact tolerances, one printed
pass/fail line each.  Run with ``pytest tests/test_acceptance.py -v -s``."""

import itertools
import random
from contextlib import contextmanager
from fractions import Fraction

from treel0 import (
    DistanceMatrix,
    Graph,
    UltraSolverSpec,
    alpha_restrict,
    cc_bruteforce,
    centroid_quasimetric,
    check_constrained,
    check_tree_metric,
    check_ultrametric,
    clustering_to_tree,
    constrained_to_tree,
    fit_constrained,
    fit_constrained_exact,
    fit_tree,
    fit_ultrametric_bruteforce,
    fit_ultrametric_exact,
    gen_correlation,
    gen_planted,
    l0_distance,
    matrix_to_tree,
    parse_newick,
    random_hierarchy,
    random_tree,
    restricted_instance,
    serialize_newick,
    squeeze,
    squeeze_ultrametric,
    witness_holds,
)

from conftest import rand_constrained, rand_matrix

HEURISTIC = UltraSolverSpec(kind="heuristic")
EXACT = UltraSolverSpec(kind="exact")


@contextmanager
def criterion(number, name):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {number} {name}: FAIL")
        raise
    print(f"ACCEPTANCE {number} {name}: PASS")


def test_1_zero_noise_recovery():
    with criterion(1, "zero-noise recovery"):
        sizes = (8, 16, 32, 64)
        for i in range(50):
            n = sizes[i % 4]
            inst = gen_planted(n, 0, seed=i)
            fitted, report = fit_tree(inst.matrix, HEURISTIC)
            assert report.cost == 0
            text = serialize_newick(matrix_to_tree(fitted))
            back = parse_newick(text).induced_matrix(inst.matrix.labels)
            assert back.values == inst.matrix.values


def test_2_constrained_factor_two():
    with criterion(2, "2-rho constrained bound"):
        for i in range(200):
            inst = rand_constrained(seed=10_000 + i, n=4)
            _, report = fit_constrained(inst, EXACT)
            optimum = l0_distance(inst.matrix, fit_constrained_exact(inst))
            assert report.cost <= 2 * optimum


def test_3_end_to_end_factor_six():
    with criterion(3, "6-rho end-to-end bound"):
        # planted instances: the planted tree bounds the optimum by k
        for i in range(100):
            k = i % 5
            inst = gen_planted(5, k, seed=20_000 + i)
            _, report = fit_tree(inst.matrix, EXACT)
            assert report.cost <= 6 * k
        # reduction instances small enough for the exact subsolver: the
        # clustering optimum equals the tree-fitting optimum (here 0)
        for edges in ((), (("a", "b"),)):
            graph = Graph(("a", "b"), edges)
            cc_opt, _ = cc_bruteforce(graph)
            _, report = fit_tree(gen_correlation(graph), EXACT)
            assert report.cost <= 6 * cc_opt


def test_4_restriction_factor_three():
    with criterion(4, "restriction factor 3"):
        for i in range(200):
            rng = random.Random(30_000 + i)
            n = rng.randint(3, 8)
            labels = tuple(f"e{j}" for j in range(n))
            tree = random_tree(labels, rng)
            d = rand_matrix(rng, n, lo=0, hi=8)
            base = l0_distance(tree.induced_matrix(labels), d)
            best = min(
                l0_distance(alpha_restrict(tree, d, a).induced_matrix(labels), d)
                for a in labels
            )
            assert best <= 3 * base


def test_5_bijection_identity():
    with criterion(5, "bijection cost identity"):
        for i in range(200):
            rng = random.Random(40_000 + i)
            n = rng.randint(3, 6)
            d = rand_matrix(rng, n, lo=1, hi=9)
            alpha = d.labels[rng.randrange(n)]
            quasi = centroid_quasimetric(d, alpha)
            inst = restricted_instance(d, alpha)
            seed_ultra = random_hierarchy(d.labels, rng).induced_matrix(d.labels)
            u = squeeze_ultrametric(seed_ultra, inst)
            t = constrained_to_tree(u, quasi)  # asserts the four-point condition
            assert l0_distance(u, inst.matrix) == l0_distance(t, d)
            for lab in d.labels:
                assert t.get(alpha, lab) == d.get(alpha, lab)


def test_6_squeeze_suite():
    with criterion(6, "squeeze suite"):
        for i in range(500):
            rng = random.Random(50_000 + i)
            inst = rand_constrained(seed=50_000 + i, n=rng.randint(2, 6))
            labels = inst.labels
            a = rand_matrix(random.Random(60_000 + i), len(labels))
            a = DistanceMatrix(labels, a.values)
            # idempotence
            once = squeeze(a, inst).matrix
            assert squeeze(once, inst).matrix.values == once.values
            # bounds
            for x, y, val in once.iter_pairs():
                floor = inst.pair_floor(labels[x], labels[y])
                assert floor <= val <= inst.h
            # clamping the solver target never hurts against clamped points
            u = random_hierarchy(labels, rng).induced_matrix(labels)
            s_u = squeeze_ultrametric(u, inst)
            assert check_constrained(s_u, inst) is None
            s_d = squeeze(inst.matrix, inst).matrix
            assert l0_distance(s_d, s_u) <= l0_distance(s_d, u)
            # pointwise two-hop inequality at feasible targets
            d = inst.matrix
            for x, y, dval in d.iter_pairs():
                lab_x, lab_y = labels[x], labels[y]
                floor = inst.pair_floor(lab_x, lab_y)
                sval = s_d.get(lab_x, lab_y)
                for w in (floor, inst.h, min(inst.h, max(dval, floor))):
                    lhs = (1 if dval != sval else 0) + (1 if sval != w else 0)
                    assert lhs <= 2 * (1 if dval != w else 0)


def test_7_oracle_cross_check():
    with criterion(7, "exact-solver oracle cross-check"):
        labels = ("a", "b", "c", "d")
        grid = (Fraction(0), Fraction(1), Fraction(2))
        for combo in itertools.product(grid, repeat=6):
            d = DistanceMatrix(labels, combo)
            dp_cost = l0_distance(d, fit_ultrametric_exact(d))
            _, brute_cost = fit_ultrametric_bruteforce(d)
            assert dp_cost == brute_cost


def test_8_clustering_equivalence():
    with criterion(8, "clustering equivalence at the optimum"):
        # the 16-element instances exceed the exact subsolver, so the upper
        # bound comes from the heuristic pipeline and the star construction
        # built on the optimal clustering; their best must hit the optimum
        vertices = ("a", "b", "c", "d")
        all_pairs = list(itertools.combinations(vertices, 2))
        for mask in range(64):
            edges = tuple(p for i, p in enumerate(all_pairs) if mask >> i & 1)
            graph = Graph(vertices, edges)
            d = gen_correlation(graph)
            cc_opt, partition = cc_bruteforce(graph)
            _, report = fit_tree(d, HEURISTIC)
            construction = l0_distance(clustering_to_tree(graph, partition), d)
            assert construction == cc_opt
            achieved = min(report.cost, construction)
            assert achieved == cc_opt
        path = Graph(("1", "2", "3"), (("1", "2"), ("2", "3")))
        d = gen_correlation(path)
        cc_opt, partition = cc_bruteforce(path)
        assert cc_opt == 1
        _, report = fit_tree(d, HEURISTIC)
        achieved = min(
            report.cost, l0_distance(clustering_to_tree(path, partition), d)
        )
        assert achieved == 1


def test_9_verifier_soundness():
    with criterion(9, "verifier soundness"):
        for i in range(1000):
            rng = random.Random(70_000 + i)
            n = rng.randint(3, 10)
            labels = tuple(f"e{j}" for j in range(n))
            u = random_hierarchy(labels, rng).induced_matrix(labels)
            assert check_ultrametric(u) is None
            # push one pair strictly above everything: its triples then have
            # a unique maximum
            i0, j0 = 0, rng.randrange(1, n)
            spoiled = u.replace({(i0, j0): max(u.values) + 1 + u.at(i0, j0)})
            witness = check_ultrametric(spoiled)
            assert witness is not None
            assert witness_holds(witness, spoiled)
        for i in range(1000):
            rng = random.Random(80_000 + i)
            n = rng.randint(4, 9)
            labels = tuple(f"e{j}" for j in range(n))
            t = random_tree(labels, rng).induced_matrix(labels)
            assert check_tree_metric(t) is None
            # push one pair above the total weight: breaks a triangle
            i0, j0 = 0, rng.randrange(1, n)
            bound = sum(t.values, Fraction(0)) + 1
            spoiled = t.replace({(i0, j0): bound})
            witness = check_tree_metric(spoiled)
            assert witness is not None
            assert witness_holds(witness, spoiled)
