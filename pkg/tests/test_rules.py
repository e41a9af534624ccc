import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import random_rule

from qdst.rules import (
    And,
    AndStage,
    Not,
    NotStage,
    Or,
    RuleSyntaxError,
    UnboundVariableError,
    Var,
    Xor,
    eval_bool,
    evaluate_bitwise,
    lower,
    parse,
    pretty,
    variables,
)

m1, m2, m3 = Var("m1"), Var("m2"), Var("m3")
EQ8 = "(~(m1 & m2)) & (m2 | m3)"


def exprs(names=("a", "b", "c", "d")):
    leaves = st.sampled_from(names).map(Var)
    return st.recursive(
        leaves,
        lambda kids: st.one_of(
            kids.map(Not),
            st.lists(kids, min_size=2, max_size=3).map(lambda c: And(tuple(c))),
            st.lists(kids, min_size=2, max_size=3).map(lambda c: Or(tuple(c))),
            st.tuples(kids, kids).map(lambda ab: Xor(*ab)),
        ),
        max_leaves=8,
    )


def assignments(names):
    for bits in itertools.product((0, 1), repeat=len(names)):
        yield dict(zip(names, bits))


class TestParse:
    def test_customized_rule(self):
        assert parse(EQ8) == And((Not(And((m1, m2))), Or((m2, m3))))

    def test_single_variable(self):
        assert parse("m1") == m1

    def test_xor(self):
        assert parse("m1 ^ m2") == Xor(m1, m2)

    def test_precedence(self):
        assert parse("~a & b | c") == Or((And((Not(Var("a")), Var("b"))), Var("c")))
        assert parse("a | b ^ c") == Xor(Or((Var("a"), Var("b"))), Var("c"))
        assert parse("a ^ b ^ c") == Xor(Xor(Var("a"), Var("b")), Var("c"))

    def test_chains_are_nary(self):
        assert parse("m1&m2&m3") == And((m1, m2, m3))
        assert parse("m1 | m2 | m3") == Or((m1, m2, m3))

    def test_whitespace_insignificant(self):
        assert parse("  ( m1&~m2 )|m3 ") == parse("(m1 & ~m2) | m3")

    @pytest.mark.parametrize(
        "text, position",
        [("", 0), ("   ", 0), ("m1 &", 4), ("(m1 | m2", 8), ("m1 m2", 3), ("m1 + m2", 3), (")", 0)],
    )
    def test_syntax_errors_carry_position(self, text, position):
        with pytest.raises(RuleSyntaxError) as info:
            parse(text)
        assert info.value.position == position

    @given(exprs())
    @settings(max_examples=200, deadline=None)
    def test_pretty_round_trip(self, e):
        once = parse(pretty(e))
        assert once == e
        assert parse(pretty(once)) == once

    def test_variables_in_order(self):
        assert variables(parse("m3 & (m1 | ~m3)")) == ["m3", "m1"]


class TestEvalBool:
    def test_conjunction_truth_table(self):
        rule = parse("m1 & m2 & m3")
        for bits in assignments(["m1", "m2", "m3"]):
            assert eval_bool(rule, bits) == int(all(bits.values()))

    def test_customized_rule_point(self):
        assert eval_bool(parse(EQ8), {"m1": 1, "m2": 1, "m3": 0}) == 0

    def test_demorgan(self):
        for bits in assignments(["a", "b"]):
            assert eval_bool(parse("a | b"), bits) == eval_bool(parse("~(~a & ~b)"), bits)

    def test_xor_definition(self):
        for bits in assignments(["a", "b"]):
            expected = (bits["a"] and not bits["b"]) or (not bits["a"] and bits["b"])
            assert eval_bool(parse("a ^ b"), bits) == int(expected)

    def test_unbound(self):
        with pytest.raises(UnboundVariableError):
            eval_bool(parse("a & b"), {"a": 1})

    @given(exprs(), st.integers(1, 3))
    @settings(max_examples=100, deadline=None)
    def test_bitwise_is_per_element(self, e, n):
        names = variables(e)
        rng = np.random.default_rng(len(names) * 7 + n)
        idx = {v: int(rng.integers(1 << n)) for v in names}
        out = evaluate_bitwise(e, idx, n)
        for k in range(n):
            assert (out >> k) & 1 == eval_bool(e, {v: (i >> k) & 1 for v, i in idx.items()})


class TestLower:
    def test_or_is_negated_and_then_not(self):
        plan = lower("m1 | m2")
        assert plan.stages == (AndStage(((0, False), (1, False)), 2), NotStage(2))
        assert plan.output == 2

    def test_customized_rule_stages(self):
        plan = lower(EQ8)
        assert plan.stages == (
            AndStage(((0, True), (1, True)), 3),
            NotStage(3),
            AndStage(((1, False), (2, False)), 4),
            NotStage(4),
            AndStage(((3, True), (4, True)), 5),
        )
        assert plan.register_count == 6

    def test_xor_stages(self):
        plan = lower("m1 ^ m2")
        ands = plan.and_stages
        assert ands[0].inputs == ((0, True), (1, False))
        assert ands[1].inputs == ((0, False), (1, True))
        assert ands[2].inputs == ((2, False), (3, False))
        assert plan.stages[-1] == NotStage(4) and plan.output == 4

    def test_conjunction_is_one_stage(self):
        plan = lower("m1 & m2 & m3")
        assert plan.stages == (AndStage(((0, True), (1, True), (2, True)), 3),)

    def test_leaf_negation_absorbed(self):
        assert lower("~m1 & m2").stages == (AndStage(((0, False), (1, True)), 2),)

    def test_double_negation_removed(self):
        assert lower("~~m1 & m2") == lower("m1 & m2")
        assert lower("~~(m1 | m2)") == lower("m1 | m2")
        assert lower("~(m1 | m2)").stages == (AndStage(((0, False), (1, False)), 2),)

    def test_bare_negation(self):
        plan = lower("~m1")
        assert plan.stages == (NotStage(0),) and plan.output == 0

    def test_input_order_override(self):
        plan = lower("m2 & m1", inputs=["m1", "m2", "m3"])
        assert plan.inputs == ("m1", "m2", "m3")
        assert plan.stages == (AndStage(((1, True), (0, True)), 3),)

    def test_register_count(self):
        for text in ["m1 & m2", EQ8, "m1 ^ m2 ^ m3", "~(m1 | ~m2) ^ m3"]:
            plan = lower(text)
            assert plan.register_count == len(plan.inputs) + len(plan.and_stages)

    @given(exprs())
    @settings(max_examples=200, deadline=None)
    def test_plan_agrees_with_rule(self, e):
        plan = lower(e)
        assert all(isinstance(s, (AndStage, NotStage)) for s in plan.stages)
        for bits in assignments(plan.inputs):
            assert plan.evaluate(bits) == eval_bool(e, bits)

    def test_random_rules_exhaustively(self):
        rng = np.random.default_rng(5)
        for _ in range(300):
            e = random_rule(rng, ["a", "b", "c", "d"], depth=4)
            plan = lower(e)
            for bits in assignments(plan.inputs):
                assert plan.evaluate(bits) == eval_bool(e, bits)
