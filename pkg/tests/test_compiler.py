from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from conftest import pmfs, unit_rationals
from oracles import brute_combine, final_distribution, marginal_of
from crncalc.analysis import compare, explore, output_distribution
from crncalc.calculus import DExpr, Environment, evaluate, parse_formula
from crncalc.compiler import (
    CompileOptions,
    compile_direct,
    compile_direct_ratefree,
    compile_joint,
    compile_truncated,
    op_con,
    op_cone,
    op_div,
    op_min,
    op_mul,
    op_sum,
    special_binomial,
    special_poisson,
    special_uniform,
    translate,
)
from crncalc.crn import Reaction, is_nro, rename
from crncalc.errors import (
    DivisorZero,
    EpsilonOutOfRange,
    InvalidPmf,
    NonPositiveRate,
    NonRepresentableCount,
    NotNro,
    OutputNotFound,
    ProbabilityOutOfRange,
    UnboundVariable,
)
from crncalc.pmf import (
    Pmf,
    geometric_tail,
    pmf_convex,
    pmf_div_nat,
    pmf_min,
    pmf_mul_nat,
    pmf_sum,
    poisson_tail,
)

EX1 = Pmf({2: F(1, 6), 5: F(1, 3), 10: F(1, 2)})
PI1 = Pmf({3: F(1, 6), 0: F(5, 6)})
PI2 = Pmf({5: F(1, 2), 1: F(1, 2)})


def law(crs, name="L_out"):
    return output_distribution(crs, [name]).marginal(name)


def brute_law(crs, name="L_out"):
    return Pmf(marginal_of(final_distribution(crs), crs, name))


def operand(f):
    return rename(compile_direct(f), "L_o", "L_out")


class TestDirect:
    def test_example_shape(self):
        c = compile_direct(EX1)
        assert len(c.reactions) == 6 and len(c.species) == 8
        assert [c.initial[f"L{i}"] for i in (1, 2, 3)] == [2, 5, 10]
        assert c.initial["L_z"] == 1
        assert Reaction.of("L_z", "L1_1", F(1, 6)) in c.reactions
        assert Reaction.of("L3 + L3_3", "L3_3 + L_out") in c.reactions
        assert c.outputs == ("L_out",) and is_nro(c)

    def test_example_law(self):
        c = compile_direct(EX1)
        assert law(c) == EX1 == brute_law(c)

    @pytest.mark.parametrize("f", [Pmf({0: 1}), Pmf({7: 1})])
    def test_single_point(self, f):
        c = compile_direct(f)
        assert len(c.reactions) == 2 and law(c) == f

    def test_terminal_states_are_drained(self):
        c = compile_direct(EX1)
        sp = explore(c)
        for x, succ in zip(sp.states, sp.successors):
            if not succ:
                counts = c.counts(x)
                assert counts["L_z"] == 0
                chosen = [i for i in (1, 2, 3) if counts[f"L{i}_{i}"]]
                assert len(chosen) == 1 and counts[f"L{chosen[0]}"] == 0

    def test_ratefree_counts(self):
        c = compile_direct_ratefree(EX1)
        assert all(r.rate == 1 for r in c.reactions)
        assert [c.initial[f"L_c{i}"] for i in (1, 2, 3)] == [1, 2, 3]
        assert law(c) == EX1 == brute_law(c)
        assert compile_direct_ratefree(Pmf({0: 1})).initial["L_c1"] == 1
        half = compile_direct_ratefree(Pmf({1: F(1, 2), 2: F(1, 2)}))
        assert half.initial["L_c1"] == half.initial["L_c2"] == 1
        assert law(half) == Pmf({1: F(1, 2), 2: F(1, 2)})

    def test_ratefree_option(self):
        assert compile_direct(EX1, CompileOptions(rate_free=True)) == compile_direct_ratefree(EX1)

    @given(pmfs(max_value=6, max_points=4))
    def test_law_equals_input(self, f):
        assert law(compile_direct(f)) == f
        assert law(compile_direct_ratefree(f)) == f

    def test_empty(self):
        with pytest.raises(InvalidPmf):
            compile_truncated(iter(()), F(1, 2))


class TestJoint:
    F2 = Pmf({(3, 1): F(1, 6), (3, 2): F(1, 3), (1, 5): F(1, 2)})

    def test_example(self):
        c = compile_joint(self.F2)
        assert len(c.reactions) == 9
        assert c.outputs == ("L_out1", "L_out2") and is_nro(c)
        assert output_distribution(c).joint() == self.F2

    def test_brute_force(self):
        c = compile_joint(self.F2)
        dist = final_distribution(c)
        i, j = c.index("L_out1"), c.index("L_out2")
        joint = {}
        for x, p in dist.items():
            joint[(x[i], x[j])] = joint.get((x[i], x[j]), 0) + p
        assert Pmf(joint) == self.F2

    @pytest.mark.parametrize("f", [Pmf({(0, 0): 1}), Pmf({(1, 1): F(1, 2), (2, 0): F(1, 2)})])
    def test_small(self, f):
        assert output_distribution(compile_joint(f)).joint() == f

    @given(pmfs(max_value=4, max_points=3, dim=3))
    def test_random(self, f):
        assert output_distribution(compile_joint(f)).joint() == f


class TestTruncated:
    def test_geometric(self):
        c, lost = compile_truncated(geometric_tail(F(1, 2)), F(1, 8))
        assert lost == F(1, 16) and c.meta["mass_lost"] == "1/16"
        assert sorted(c.initial[n] for n in c.species if n.startswith("L") and n[1:].isdigit()) == [0, 1, 2, 3]
        out = dict(law(c).scalar_items())
        assert out[0] == F(1, 2) + F(1, 16)
        kept = {k: F(1, 2 ** (k + 1)) for k in range(4)}
        gap = sum(abs(out.get(k, 0) - kept.get(k, 0)) for k in range(4)) + lost
        assert gap < 2 * F(1, 8)

    def test_finite_source(self):
        c, lost = compile_truncated(EX1.scalar_items(), F(1, 100))
        assert lost == 0 and "L_sink" not in c.species and law(c) == EX1

    def test_poisson_one(self):
        c, lost = compile_truncated(poisson_tail(1), F(1, 100))
        assert lost < F(1, 100)
        assert [v for v, _ in law(c).scalar_items()] == [0, 1, 2, 3, 4]

    @pytest.mark.parametrize("eps", [0, 1, F(-1, 2)])
    def test_epsilon_range(self, eps):
        with pytest.raises(EpsilonOutOfRange):
            compile_truncated(geometric_tail(F(1, 2)), eps)


class TestSpecial:
    def test_poisson_shape(self):
        c = special_poisson(5, 1)
        assert [r.rate for r in c.reactions] == [5, 1]
        assert not c.composable and not is_nro(c)

    def test_binomial_small(self):
        assert law(special_binomial(2, 1, 1), "L1") == Pmf({0: F(1, 4), 1: F(1, 2), 2: F(1, 4)})
        assert law(special_binomial(0, 1, 1), "L1") == Pmf({0: 1})

    @pytest.mark.parametrize("split", [(3, 0), (0, 3), (2, 1)])
    def test_uniform_small(self, split):
        assert law(special_uniform(3, split=split), "L1") == Pmf({k: F(1, 4) for k in range(4)})

    def test_uniform_empty(self):
        assert law(special_uniform(0), "L1") == Pmf({0: 1})

    def test_rates_checked(self):
        for build in (lambda: special_poisson(0, 1), lambda: special_binomial(2, 1, -1),
                      lambda: special_uniform(2, 0)):
            with pytest.raises(NonPositiveRate):
                build()

    def test_not_composable(self):
        with pytest.raises(NotNro):
            op_sum(special_poisson(1, 1), "L", operand(PI1), "L_o")


class TestOperators:
    def test_sum_example(self):
        c = op_sum(operand(PI1), "L_o", operand(PI2), "L_o")
        expected = Pmf({8: F(1, 12), 5: F(5, 12), 4: F(1, 12), 1: F(5, 12)})
        assert law(c) == expected == brute_law(c)
        assert is_nro(c) and c.outputs == ("L_out",)

    def test_min_example(self):
        c = op_min(operand(PI1), "L_o", operand(PI2), "L_o")
        assert law(c) == Pmf({3: F(1, 12), 1: F(1, 12), 0: F(5, 6)}) == brute_law(c)

    def test_mul_example(self):
        assert law(op_mul(operand(PI2), "L_o", 2)) == Pmf({10: F(1, 2), 2: F(1, 2)})
        assert law(op_mul(operand(PI2), "L_o", 1)) == PI2
        zero = op_mul(operand(Pmf({7: 1})), "L_o", 0)
        assert zero.reactions[-1].product == () and law(zero) == Pmf({0: 1})

    def test_div_example(self):
        assert law(op_div(operand(PI2), "L_o", 2)) == Pmf({2: F(1, 2), 0: F(1, 2)})
        assert law(op_div(operand(Pmf({4: 1})), "L_o", 2)) == Pmf({2: 1})
        with pytest.raises(DivisorZero):
            op_div(operand(PI2), "L_o", 0)

    def test_con_example(self):
        c = op_con(operand(Pmf({10: 1})), "L_o", operand(Pmf({20: 1})), "L_o", F(3, 10))
        assert law(c) == Pmf({10: F(3, 10), 20: F(7, 10)}) == brute_law(c)
        assert sorted(r.rate for r in c.reactions if r.source == (("L_z", 1),)) == [F(3, 10), F(7, 10)]
        assert law(op_con(operand(PI1), "L_o", operand(PI2), "L_o", 1)) == PI1
        with pytest.raises(ProbabilityOutOfRange):
            op_con(operand(PI1), "L_o", operand(PI2), "L_o", F(3, 2))

    def test_con_ratefree(self):
        c = op_con(operand(PI1), "L_o", operand(PI2), "L_o", F(2, 5), CompileOptions(rate_free=True))
        assert all(r.rate == 1 for r in c.reactions if r.source and r.source[0][0] == "L_z")
        assert law(c) == pmf_convex(PI1, PI2, F(2, 5))

    def test_errors(self):
        with pytest.raises(OutputNotFound):
            op_sum(operand(PI1), "nope", operand(PI2), "L_o")
        bad = rename(compile_direct(PI1), "L_o", "L_out")
        bad = type(bad)(bad.species, bad.reactions + (Reaction.of("L_o", "L1"),), bad.initial, bad.outputs)
        with pytest.raises(NotNro):
            op_mul(bad, "L_o", 2)

    def test_name_hygiene(self):
        a, b = operand(PI1), operand(PI2)
        c = op_sum(a, "L_o", b, "L_o")
        assert len(set(c.species)) == len(c.species) == len(a.species) + len(b.species) + 1
        assert {"l.L_z", "r.L_z"} <= set(c.species)
        nested = op_sum(rename(c, "L_o", "L_out"), "L_o", operand(PI1), "L_o")
        assert len(set(nested.species)) == len(nested.species)

    @settings(max_examples=25)
    @given(pmfs(max_value=4, max_points=3), pmfs(max_value=4, max_points=3), unit_rationals(6))
    def test_against_pmf_operations(self, a, b, p):
        x, y = operand(a), operand(b)
        assert law(op_sum(x, "L_o", y, "L_o")) == pmf_sum(a, b)
        assert law(op_min(x, "L_o", y, "L_o")) == pmf_min(a, b)
        assert law(op_con(x, "L_o", y, "L_o", p)) == pmf_convex(a, b, p)
        assert law(op_mul(x, "L_o", 3)) == pmf_mul_nat(a, 3)
        assert law(op_div(x, "L_o", 2)) == pmf_div_nat(a, 2)

    @settings(max_examples=10)
    @given(pmfs(max_value=3, max_points=2), pmfs(max_value=3, max_points=2))
    def test_brute_force_agrees(self, a, b):
        c = op_min(operand(a), "L_o", operand(b), "L_o")
        expected = Pmf(brute_combine(dict(a.scalar_items()), dict(b.scalar_items()), min))
        assert brute_law(c) == law(c) == expected


class TestCone:
    def test_delegates_for_constants(self):
        a, b = operand(PI1), operand(PI2)
        assert op_cone(a, "L_o", b, "L_o", DExpr(F(1, 3)), {}) == op_con(a, "L_o", b, "L_o", F(1, 3))

    def test_structure_at_scale_1000(self):
        a, b = operand(Pmf({10: 1})), operand(Pmf({20: 1}))
        opts = CompileOptions(cone_scale=1000)
        c = op_cone(a, "L_o", b, "L_o", DExpr(0, ((F(1), "c"),)), {"c": F(3, 10)}, opts)
        assert c.initial["L_r2"] == 1000 and c.initial["L_c_c"] == 300
        assert c.initial.get("L_r1", 0) == 0 and c.meta["K"] == "1000"
        fast = [r for r in c.reactions if r.rate == 10**6]
        assert len(fast) == 2 and is_nro(c)

    def test_default_scale(self):
        a, b = operand(PI1), operand(PI2)
        d = DExpr(F(1, 5), ((F(1, 2), "c"),))
        c = op_cone(a, "L_o", b, "L_o", d, {"c": F(1, 3)})
        # coefficients need 10, the environment needs 3
        assert c.initial["L_r2"] == 30 and c.initial["L_r1"] == 6 and c.initial["L_c_c"] == 1

    def test_approximation(self):
        a, b = operand(Pmf({10: 1})), operand(Pmf({20: 1}))
        d = DExpr(0, ((F(1), "c"),))
        c = op_cone(a, "L_o", b, "L_o", d, {"c": F(1, 2)})
        assert compare(Pmf({10: F(1, 2), 20: F(1, 2)}), law(c)).l1 <= 1e-3

    def test_errors(self):
        a, b = operand(PI1), operand(PI2)
        d = DExpr(0, ((F(1, 2), "c"),))
        with pytest.raises(UnboundVariable):
            op_cone(a, "L_o", b, "L_o", d, {})
        with pytest.raises(NonRepresentableCount):
            op_cone(a, "L_o", b, "L_o", d, {"c": F(1, 3)}, CompileOptions(cone_scale=4))
        with pytest.raises(NonRepresentableCount):
            op_cone(a, "L_o", b, "L_o", d, {"c": F(1, 3)}, CompileOptions(cone_scale=3))


class TestTranslate:
    def test_base(self):
        one = translate(parse_formula("one"))
        assert one.reactions == () and one.initial["L_out"] == 1
        assert translate(parse_formula("zero")).initial.get("L_out", 0) == 0

    def test_bernoulli(self):
        c = translate(parse_formula("(one)_[1/3]:(zero)"))
        assert law(c) == Pmf({1: F(1, 3), 0: F(2, 3)}) == brute_law(c)

    def test_scale_multiplies_then_divides(self):
        c = translate(parse_formula("3/2 * (one + one)"))
        assert law(c) == Pmf({3: 1})
        assert any(dict(r.product).get("i.L_o") == 3 for r in c.reactions)
        assert any(dict(r.source).get("i.L_o") == 2 for r in c.reactions)

    @settings(max_examples=30)
    @given(st.sampled_from([
        "min(2*one, (one)_[1/2]:(3*one))",
        "(one + one)_[1/4]:(1/2*(5*one))",
        "min(one + (2*one)_[1/3]:(zero), 4/3*(one)_[2/3]:(2*one))",
    ]))
    def test_matches_evaluation(self, text):
        f = parse_formula(text)
        c = translate(f)
        assert is_nro(c) and law(c) == evaluate(f)

    def test_example_with_environment(self):
        f = parse_formula("(one)_[1/1000*c + 1/5]:(4*one) + (2*one)_[2/5]:(3*one)")
        env = Environment({"c": F(1, 2)})
        c = translate(f, env)
        assert compare(evaluate(f, env), law(c)).l1 <= 1e-3
