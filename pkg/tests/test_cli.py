import random
import subprocess
import sys
from fractions import Fraction

from treel0 import (
    format_constrained_instance,
    format_distance_matrix,
    l0_distance,
    parse_distance_matrix,
    parse_newick,
    random_tree,
)
from treel0.cli import main

from conftest import matrix, rand_constrained, rand_matrix


def write_matrix(tmp_path, d, name="input.dist"):
    path = tmp_path / name
    path.write_text(format_distance_matrix(d))
    return path


def tree_metric_fixture():
    rng = random.Random(60)
    labels = tuple(f"e{i}" for i in range(6))
    return random_tree(labels, rng).induced_matrix(labels)


class TestFitTreeCommand:
    def test_tree_metric_reports_zero(self, tmp_path, capsys):
        d = tree_metric_fixture()
        inp = write_matrix(tmp_path, d)
        out = tmp_path / "tree.nwk"
        rep = tmp_path / "report.txt"
        code = main(
            ["fit-tree", "--input", str(inp), "--solver", "heuristic",
             "--output", str(out), "--report", str(rep)]
        )
        assert code == 0
        assert capsys.readouterr().out.strip() == "cost 0"
        lines = rep.read_text().splitlines()
        assert lines[0] == "cost 0"
        assert lines[1].startswith("alpha ")
        assert lines[2] == "solver heuristic"
        assert lines[3] == "n 6"
        # the written tree re-induces the input exactly
        back = parse_newick(out.read_text()).induced_matrix(d.labels)
        assert back.values == d.values

    def test_report_reverifies_on_noisy_input(self, tmp_path):
        rng = random.Random(61)
        d = rand_matrix(rng, 5, hi=4)
        inp = write_matrix(tmp_path, d)
        out = tmp_path / "tree.nwk"
        rep = tmp_path / "report.txt"
        assert main(
            ["fit-tree", "--input", str(inp), "--solver", "exact",
             "--output", str(out), "--report", str(rep)]
        ) == 0
        lines = rep.read_text().splitlines()
        cost = int(lines[0].split()[1])
        fitted = parse_newick(out.read_text()).induced_matrix(d.labels)
        assert l0_distance(fitted, d) == cost
        pair_lines = [ln for ln in lines if ln.startswith("pair ")]
        assert len(pair_lines) == cost

    def test_malformed_matrix_names_the_pair(self, tmp_path, capsys):
        bad = tmp_path / "bad.dist"
        bad.write_text("2\na b\n0 1\n2 0\n")
        assert main(["fit-tree", "--input", str(bad)]) == 1
        assert "(a, b)" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["fit-tree", "--input", str(tmp_path / "nope")]) == 1

    def test_path_graph_reduction_file_costs_one(self, tmp_path, capsys):
        # the 9-element reduction instance exceeds the exact subsolver cap,
        # so the heuristic pipeline carries it; it still lands on the optimum
        graph_file = tmp_path / "g.txt"
        graph_file.write_text("3\n1 2 3\n1 2\n2 3\n")
        inst = tmp_path / "cc.dist"
        assert main(["gen", "cc", "--input", str(graph_file), "--output", str(inst)]) == 0
        capsys.readouterr()
        out = tmp_path / "tree.nwk"
        assert main(
            ["fit-tree", "--input", str(inst), "--solver", "heuristic",
             "--output", str(out)]
        ) == 0
        assert capsys.readouterr().out.strip() == "cost 1"
        assert main(["check", "--input", str(out), "--kind", "newick"]) == 0
        assert main(["fit-tree", "--input", str(inst), "--solver", "exact"]) == 2


class TestFitUltraCommand:
    def test_ultrametric_costs_zero(self, tmp_path, capsys):
        d = matrix("uvw", 2, 2, 1)
        inp = write_matrix(tmp_path, d)
        assert main(["fit-ultra", "--input", str(inp), "--solver", "exact"]) == 0
        assert capsys.readouterr().out.strip() == "cost 0"

    def test_three_two_one_exact_cost_one(self, tmp_path, capsys):
        inp = write_matrix(tmp_path, matrix("uvw", 3, 2, 1))
        out = tmp_path / "dendro.nwk"
        assert main(
            ["fit-ultra", "--input", str(inp), "--solver", "exact", "--output", str(out)]
        ) == 0
        assert capsys.readouterr().out.strip() == "cost 1"
        assert main(["check", "--input", str(out), "--kind", "newick"]) == 0

    def test_exact_limit_exceeded_is_exit_two(self, tmp_path):
        rng = random.Random(62)
        inp = write_matrix(tmp_path, rand_matrix(rng, 8))
        assert main(["fit-ultra", "--input", str(inp), "--solver", "exact"]) == 2

    def test_exact_limit_flag_raises_the_cap(self, tmp_path):
        rng = random.Random(63)
        inp = write_matrix(tmp_path, rand_matrix(rng, 7, hi=3))
        assert main(
            ["fit-ultra", "--input", str(inp), "--solver", "exact", "--exact-limit", "7"]
        ) == 0


class TestFitConstrainedCommand:
    def test_inactive_constraints_match_ultra(self, tmp_path, capsys):
        d = matrix("auv", 9, 9, 4)
        from treel0 import ConstrainedInstance

        inst = ConstrainedInstance(
            d, "a", Fraction(9),
            {"a": Fraction(9), "u": Fraction(0), "v": Fraction(0)},
        )
        path = tmp_path / "inst.txt"
        path.write_text(format_constrained_instance(inst))
        assert main(["fit-constrained", "--input", str(path), "--solver", "exact"]) == 0
        assert capsys.readouterr().out.strip() == "cost 0"

    def test_singleton_band_counts_off_level_pairs(self, tmp_path, capsys):
        level = Fraction(4)
        d = matrix("abc", 4, 1, 2)
        from treel0 import ConstrainedInstance

        inst = ConstrainedInstance(d, "a", level, {lab: level for lab in "abc"})
        path = tmp_path / "inst.txt"
        path.write_text(format_constrained_instance(inst))
        assert main(["fit-constrained", "--input", str(path), "--solver", "exact"]) == 0
        assert capsys.readouterr().out.strip() == "cost 2"

    def test_random_instance_report(self, tmp_path):
        inst = rand_constrained(64)
        path = tmp_path / "inst.txt"
        path.write_text(format_constrained_instance(inst))
        rep = tmp_path / "rep.txt"
        assert main(
            ["fit-constrained", "--input", str(path), "--solver", "exact",
             "--report", str(rep)]
        ) == 0
        from treel0 import fit_constrained_exact

        cost = int(rep.read_text().splitlines()[0].split()[1])
        assert cost <= 2 * l0_distance(inst.matrix, fit_constrained_exact(inst))


class TestCheckCommand:
    def test_ultrametric_file_is_a_tree_metric(self, tmp_path):
        inp = write_matrix(tmp_path, matrix("uvw", 2, 2, 1))
        assert main(["check", "--input", str(inp), "--kind", "tree"]) == 0
        assert main(["check", "--input", str(inp), "--kind", "ultrametric"]) == 0

    def test_four_cycle_fails_with_witness(self, tmp_path, capsys):
        inp = write_matrix(tmp_path, matrix("abcd", 1, 2, 1, 1, 2, 1))
        assert main(["check", "--input", str(inp), "--kind", "tree"]) == 1
        out = capsys.readouterr().out
        assert "four-point-violation" in out
        assert "(a, b, c, d)" in out

    def test_tolerance_flag(self, tmp_path):
        inp = write_matrix(tmp_path, matrix("uvw", Fraction(21, 10), 2, 1))
        assert main(["check", "--input", str(inp), "--kind", "ultrametric"]) == 1
        assert main(
            ["check", "--input", str(inp), "--kind", "ultrametric",
             "--tolerance", "0.1"]
        ) == 0

    def test_matrix_kind_validates_format_only(self, tmp_path):
        inp = write_matrix(tmp_path, matrix("abcd", 1, 2, 1, 1, 2, 1))
        assert main(["check", "--input", str(inp), "--kind", "matrix"]) == 0

    def test_newick_round_trip(self, tmp_path):
        path = tmp_path / "t.nwk"
        path.write_text("(a:1,(b:0.5,c:0.5):2);\n")
        assert main(["check", "--input", str(path), "--kind", "newick"]) == 0
        path.write_text("(a:1,(b:0.5");
        assert main(["check", "--input", str(path), "--kind", "newick"]) == 1


class TestGenCommand:
    def test_planted_zero_noise_solves_at_zero(self, tmp_path, capsys):
        out = tmp_path / "planted.dist"
        assert main(
            ["gen", "planted", "--n", "8", "--k", "0", "--seed", "3",
             "--output", str(out)]
        ) == 0
        capsys.readouterr()
        assert main(["fit-tree", "--input", str(out), "--solver", "heuristic"]) == 0
        assert capsys.readouterr().out.strip() == "cost 0"

    def test_same_seed_same_bytes(self, tmp_path):
        a = tmp_path / "a.dist"
        b = tmp_path / "b.dist"
        for out in (a, b):
            main(["gen", "planted", "--n", "6", "--k", "2", "--seed", "9",
                  "--output", str(out)])
        assert a.read_bytes() == b.read_bytes()

    def test_cc_path_graph_makes_nine_elements(self, tmp_path):
        graph_file = tmp_path / "g.txt"
        graph_file.write_text("3\n1 2 3\n1 2\n2 3\n")
        out = tmp_path / "cc.dist"
        assert main(["gen", "cc", "--input", str(graph_file), "--output", str(out)]) == 0
        d = parse_distance_matrix(out.read_text())
        assert d.n == 9

    def test_cc_delta_and_vprime_flags(self, tmp_path):
        graph_file = tmp_path / "g.txt"
        graph_file.write_text("3\n1 2 3\n1 2\n2 3\n")
        out = tmp_path / "cc.dist"
        assert main(
            ["gen", "cc", "--input", str(graph_file), "--delta", "0.25",
             "--vprime-size", "4", "--output", str(out)]
        ) == 0
        d = parse_distance_matrix(out.read_text())
        assert d.n == 7
        assert d.get("1", "2") == Fraction(1, 4)

    def test_usage_error(self):
        assert main(["gen", "planted", "--n", "4"]) == 1


class TestEntryPoint:
    def test_module_invocation(self, tmp_path):
        inp = write_matrix(tmp_path, matrix("uvw", 2, 2, 1))
        proc = subprocess.run(
            [sys.executable, "-m", "treel0", "check", "--input", str(inp),
             "--kind", "ultrametric"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert "ok ultrametric" in proc.stdout
