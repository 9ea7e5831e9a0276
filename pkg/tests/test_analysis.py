from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from conftest import pmfs
from oracles import binomial_pmf, dense_stationary, final_distribution, reachable
from crncalc import analysis
from crncalc.analysis import (
    EXACT_ABSORPTION,
    EXACT_STATIONARY,
    FLOAT_ABSORPTION,
    FLOAT_STATIONARY,
    bsccs,
    compare,
    explore,
    independent_parts,
    joint_marginal,
    output_distribution,
    output_marginals,
    solve,
    steady_state,
)
from crncalc.calculus import DExpr
from crncalc.compiler import compile_direct, op_cone, op_min, op_sum, special_binomial, special_uniform
from crncalc.crn import Crs, Reaction, rename
from crncalc.errors import OutputNotFound, StateCapExceeded
from crncalc.pmf import Pmf

EX1 = Pmf({2: F(1, 6), 5: F(1, 3), 10: F(1, 2)})


def ladder():
    """One molecule: A <-> B -> C <-> D, with A -> E.

    From A the molecule reaches {C, D} with probability 1/3 and E with 2/3;
    inside {C, D} it spends 2/3 of the time in C.
    """
    rxns = [
        Reaction.of("A", "B"), Reaction.of("B", "A"), Reaction.of("B", "C"),
        Reaction.of("A", "E"), Reaction.of("C", "D"), Reaction.of("D", "C", 2),
    ]
    return Crs(("A", "B", "C", "D", "E"), rxns, {"A": 1}, ("C", "D", "E"))


def scaled(crs, factor):
    rxns = [Reaction(r.source, r.product, r.rate * factor) for r in crs.reactions]
    return Crs(crs.species, rxns, crs.initial, crs.outputs)


class TestExplore:
    def test_matches_oracle_reachability(self):
        c = compile_direct(EX1)
        sp = explore(c)
        assert sorted(sp.states) == reachable(c)
        assert sp.states[0] == c.initial_state()

    def test_successors_sorted_and_indexed(self):
        sp = explore(special_uniform(4))
        for succ in sp.successors:
            assert [j for j, _ in succ] == sorted(j for j, _ in succ)
        assert all(sp.index[x] == i for i, x in enumerate(sp.states))
        assert len(sp.transitions) == sum(len(s) for s in sp.successors)

    def test_self_loops_dropped(self):
        c = Crs(("A",), [Reaction.of("A", "A")], {"A": 1}, ())
        sp = explore(c)
        assert len(sp) == 1 and sp.successors == [[]]

    def test_cap(self):
        with pytest.raises(StateCapExceeded):
            explore(special_uniform(50), cap=10)
        with pytest.raises(ValueError):
            explore(special_uniform(5), cap=0)

    def test_deterministic(self):
        a, b = explore(special_uniform(6)), explore(special_uniform(6))
        assert a.states == b.states and a.successors == b.successors


class TestBsccs:
    def test_absorbing_direct(self):
        sp = explore(compile_direct(EX1))
        assert len(bsccs(sp)) == 3 and all(len(b) == 1 for b in bsccs(sp))

    def test_uniform_single_component(self):
        (only,) = bsccs(explore(special_uniform(3)))
        assert len(only) == 4

    def test_ladder(self):
        sp = explore(ladder())
        sizes = sorted(len(b) for b in bsccs(sp))
        assert sizes == [1, 2]


class TestSteady:
    def test_ladder_by_hand(self):
        c = ladder()
        report = solve(c)
        assert report.method == EXACT_STATIONARY and report.exact
        marg = output_marginals(c, report)
        assert marg["E"] == Pmf({1: F(2, 3), 0: F(1, 3)})
        assert marg["C"] == Pmf({1: F(2, 9), 0: F(7, 9)})
        assert marg["D"] == Pmf({1: F(1, 9), 0: F(8, 9)})
        assert sorted(report.absorption) == [F(1, 3), F(2, 3)]

    def test_absorption_against_oracle(self):
        c = op_min(rename(compile_direct(EX1), "L_o1", "L_out"), "L_o1",
                   rename(compile_direct(Pmf({3: F(1, 4), 6: F(3, 4)})), "L_o2", "L_out"), "L_o2")
        report = solve(c)
        assert report.method == EXACT_ABSORPTION
        assert report.distribution == final_distribution(c)

    @pytest.mark.parametrize("K", [1, 3, 6])
    def test_uniform_against_dense(self, K):
        c = special_uniform(K)
        assert solve(c).distribution == dense_stationary(c)

    def test_binomial_against_formula(self):
        c = special_binomial(8, 1, 3)
        assert output_marginals(c, solve(c))["L1"] == Pmf(binomial_pmf(8, F(3, 4)))

    @pytest.mark.parametrize("split", [(10, 0), (0, 10), (5, 5), (3, 7)])
    def test_uniform_independent_of_split(self, split):
        c = special_uniform(10, split=split)
        assert output_marginals(c, solve(c))["L1"] == Pmf({k: F(1, 11) for k in range(11)})

    def test_rate_scaling_leaves_limit_unchanged(self):
        for c in (ladder(), special_uniform(4, split=(1, 3)), compile_direct(EX1)):
            assert solve(scaled(c, 7)).distribution == solve(c).distribution

    def test_float_path_agrees(self):
        for c in (ladder(), special_uniform(6), compile_direct(EX1)):
            exact = solve(c)
            approx = solve(c, method="float")
            assert approx.method in (FLOAT_ABSORPTION, FLOAT_STATIONARY) and not approx.exact
            assert approx.residual <= 1e-12
            for x, p in exact.distribution.items():
                assert approx.distribution[x] == pytest.approx(float(p), abs=1e-12)

    def test_large_bottom_component_uses_floats(self):
        report = steady_state(explore(special_uniform(8)), exact_limit=4)
        assert report.method == FLOAT_STATIONARY and report.residual <= 1e-12
        assert sum(report.distribution.values()) == pytest.approx(1.0)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            solve(ladder(), method="magic")

    def test_fast_rates(self, monkeypatch):
        a = rename(compile_direct(Pmf({1: 1})), "L_o1", "L_out")
        b = rename(compile_direct(Pmf({2: 1})), "L_o2", "L_out")
        c = op_cone(a, "L_o1", b, "L_o2", DExpr(0, ((F(1), "c"),)), {"c": F(1, 2)})
        target = Pmf({1: F(1, 2), 2: F(1, 2)})
        exact = output_distribution(c, method="exact")
        assert exact.exact and compare(target, exact.marginal("L_out")).l1 < F(1, 1000)
        monkeypatch.setattr(analysis, "EXACT_BIT_BUDGET", 8)
        fallback = output_distribution(c, method="auto")
        assert not fallback.exact
        assert compare(target, fallback.marginal("L_out")).l1 < 1e-3


class TestMarginals:
    def test_joint(self):
        c = ladder()
        joint = joint_marginal(c, solve(c), ["C", "E"])
        assert joint == Pmf({(1, 0): F(2, 9), (0, 0): F(1, 9), (0, 1): F(2, 3)})

    def test_unknown_species(self):
        c = ladder()
        with pytest.raises(OutputNotFound):
            output_marginals(c, solve(c), ["Q"])
        with pytest.raises(OutputNotFound):
            output_distribution(c, ["Q"])

    def test_compare(self):
        a, b = Pmf({0: F(1, 2), 1: F(1, 2)}), Pmf({0: F(1, 4), 1: F(3, 4)})
        exact = compare(a, b)
        assert exact.l1 == F(1, 2) and exact.ratio == F(1, 2)
        approx = compare(a, {0: 0.25, 1: 0.75})
        assert approx.l1 == pytest.approx(0.5) and approx.ratio == pytest.approx(0.5)
        assert compare(a, {0: 1.0}).ratio == 0.0


class TestFactorization:
    def test_parts_of_a_sum(self):
        a = rename(compile_direct(EX1), "L_o1", "L_out")
        b = rename(compile_direct(EX1), "L_o2", "L_out")
        c = op_sum(a, "L_o1", b, "L_o2")
        assert len(independent_parts(c)) == 2
        result = output_distribution(c)
        assert result.exact and len(result.reports) == 2
        assert result.states < len(explore(c))

    def test_nothing_fires(self):
        c = Crs(("A",), (), {"A": 4}, ("A",))
        assert independent_parts(c) == []
        assert output_distribution(c).marginal("A") == Pmf({4: 1})

    def test_passive_initial_counts_are_kept(self):
        c = Crs(("A", "B", "Out"), [Reaction.of("A", "Out"), Reaction.of("B", "Out")],
                {"A": 2, "B": 1, "Out": 3}, ("Out",))
        assert output_distribution(c).marginal("Out") == Pmf({6: 1})

    @settings(max_examples=20)
    @given(pmfs(max_value=4, max_points=3), pmfs(max_value=4, max_points=3), st.booleans())
    def test_equals_full_solve(self, f, g, use_min):
        a = rename(compile_direct(f), "L_o1", "L_out")
        b = rename(compile_direct(g), "L_o2", "L_out")
        c = (op_min if use_min else op_sum)(a, "L_o1", b, "L_o2")
        full = output_marginals(c, solve(c))["L_out"]
        assert output_distribution(c).marginal("L_out") == full

    def test_joint_across_parts(self):
        c = Crs(("A", "B", "X", "Y"), [Reaction.of("A", "X"), Reaction.of("B", "Y"),
                                       Reaction.of("A", "0")], {"A": 1, "B": 2}, ("X", "Y"))
        result = output_distribution(c)
        assert result.joint() == joint_marginal(c, solve(c))
