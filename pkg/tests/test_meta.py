"""Obligation-level operations: visibility, reflection, filtration,
expansion, embedding, well-formedness."""

import random

import pytest

from helpers import rand_obligation
from proofmgr.meta import (
    ArityMismatch,
    Def,
    DuplicateBinder,
    Fact,
    Lambda,
    New,
    NotWellFormed,
    Obligation,
    UnknownOperator,
    alpha_equal_obligation,
    check_well_formed,
    embed,
    expand_all_usable,
    expand_definition,
    fact,
    filter_obligation,
    hiding_defs,
    obligation_free_identifiers,
    obligation_to_expression,
    reflect_binders,
    render_obligation,
    unhide,
    using_defs,
)
from proofmgr.parser import parse_expression as pe
from proofmgr.syntax import Binder, Ident, pretty


def ctx_of(o: Obligation):
    return o.context


class TestVisibility:
    def test_unhide_clears_flags(self):
        ctx = (New("x"), fact(pe("P(x)"), hidden=True))
        assert unhide(ctx) == (New("x"), fact(pe("P(x)")))

    def test_unhide_identity_when_nothing_hidden(self):
        ctx = (New("x"), fact(pe("P(x)")))
        assert unhide(ctx) == ctx

    def test_unhide_idempotent(self):
        rng = random.Random(0)
        for _ in range(100):
            ctx = rand_obligation(rng).context
            assert unhide(unhide(ctx)) == unhide(ctx)

    def test_using_defs(self):
        d = Obligation((), pe("x = x"))
        ctx = (New("x"), Def("T", d, hidden=True))
        assert using_defs(ctx, {"T"}) == (New("x"), Def("T", d, hidden=False))

    def test_hiding_defs(self):
        d = Obligation((), pe("x = x"))
        ctx = (New("x"), Def("T", d, hidden=False))
        assert hiding_defs(ctx, {"T"}) == (New("x"), Def("T", d, hidden=True))

    def test_empty_name_set_is_identity(self):
        rng = random.Random(1)
        for _ in range(50):
            ctx = rand_obligation(rng).context
            assert using_defs(ctx, set()) == ctx
            assert hiding_defs(ctx, set()) == ctx

    def test_absent_names_ignored(self):
        ctx = (New("x"),)
        assert using_defs(ctx, {"nope"}) == ctx


class TestReflectBinders:
    def test_empty(self):
        assert reflect_binders(()) == ()

    def test_bounded(self):
        got = reflect_binders((Binder("x", Ident("e")),))
        assert got == (New("x"), fact(pe(r"x \in e")))

    def test_mixed(self):
        got = reflect_binders((Binder("x"), Binder("y", Ident("S"))))
        assert got == (New("x"), New("y"), fact(pe(r"y \in S")))

    def test_duplicate_binder(self):
        with pytest.raises(DuplicateBinder):
            reflect_binders((Binder("x"), Binder("x")))


class TestFiltration:
    def test_hidden_definition_becomes_declaration(self):
        o = Obligation(
            (New("x"), Def("y", Obligation((), Ident("x")), hidden=True)),
            pe("x = y"),
        )
        assert filter_obligation(o) == Obligation((New("x"), New("y")), pe("x = y"))

    def test_identity_without_hidden(self):
        o = Obligation((New("x"), fact(pe("P(x)"))), pe("P(x)"))
        assert filter_obligation(o) == o

    def test_recurses_into_nested_facts(self):
        inner = Obligation((New("u"), fact(pe("Q(u)"), hidden=True)), pe("Q(u)"))
        o = Obligation((New("Q"), Fact(inner)), pe("TRUE"))
        got = filter_obligation(o)
        assert got.context[1].obligation.context == (New("u"),)

    def test_idempotent_and_hidden_free(self):
        rng = random.Random(2)
        for _ in range(200):
            o = rand_obligation(rng)
            f = filter_obligation(o)
            assert filter_obligation(f) == f
            assert not has_hidden(f)


def has_hidden(o: Obligation) -> bool:
    for h in o.context:
        if isinstance(h, (Fact, Def)) and h.hidden:
            return True
        if isinstance(h, Fact) and has_hidden(h.obligation):
            return True
        if isinstance(h, Def) and isinstance(h.definable, Obligation):
            if has_hidden(h.definable):
                return True
    return False


class TestExpansion:
    def test_expand_in_goal(self):
        o = Obligation(
            (
                New("S"),
                New("f"),
                New("x"),
                Def("T", Obligation((), pe(r"{z \in S : z \notin f[z]}"))),
            ),
            pe("f[x] # T"),
        )
        got = expand_definition(o, "T")
        assert got.goal == pe(r"f[x] # {z \in S : z \notin f[z]}")
        assert got.context == o.context  # the definition itself remains

    def test_unused_name_changes_nothing(self):
        o = Obligation(
            (New("x"), Def("D", Obligation((), pe("x = x")))), pe("P(x)")
        )
        assert expand_definition(o, "D") == o

    def test_fact_citation_inlines_the_obligation(self):
        # hand-traced: expanding a step label cited as a bare fact replaces
        # the fact with the labelled obligation itself
        labelled = Obligation((New("x"), fact(pe(r"x \in S"))), pe("f[x] # T"))
        o = Obligation(
            (
                New("S"),
                New("f"),
                New("T"),
                Def("<3>1", labelled),
                fact(Ident("<3>1")),
            ),
            pe("TRUE"),
        )
        got = expand_definition(o, "<3>1")
        assert got.context[4] == Fact(labelled)

    def test_lambda_application(self):
        o = Obligation(
            (New("S"), Def("D", Lambda(("a",), pe(r"a \in S")))),
            pe("D(S)"),
        )
        got = expand_definition(o, "D")
        assert got.goal == pe(r"S \in S")

    def test_lambda_arity_mismatch(self):
        o = Obligation(
            (New("S"), Def("D", Lambda(("a", "b"), pe("a = b")))),
            pe("D(S)"),
        )
        with pytest.raises(ArityMismatch):
            expand_definition(o, "D")

    def test_unknown_operator(self):
        with pytest.raises(UnknownOperator):
            expand_definition(Obligation((), pe("TRUE")), "nope")

    def test_expand_all_usable_drops_spent_definitions(self):
        o = Obligation(
            (
                New("S"),
                Def("T", Obligation((), Ident("S"))),
                fact(pe(r"x \in T")),
                New("x"),
            ),
            pe(r"x \in T"),
        )
        # note: deliberately scrambled; rebuild well-formed
        o = Obligation(
            (
                New("S"),
                New("x"),
                Def("T", Obligation((), Ident("S"))),
                fact(pe(r"x \in T")),
            ),
            pe(r"x \in T"),
        )
        got = expand_all_usable(o)
        assert got == Obligation(
            (New("S"), New("x"), fact(pe(r"x \in S"))), pe(r"x \in S")
        )

    def test_hidden_definition_not_expanded_by_expand_all(self):
        o = Obligation(
            (New("S"), Def("T", Obligation((), Ident("S")), hidden=True)),
            pe(r"T \subseteq S"),
        )
        assert expand_all_usable(o) == o


class TestEmbedding:
    def test_meta_binder_example(self):
        inner = Obligation((New("x"),), pe("P(x)"))
        o = Obligation((New("P"), Fact(inner, hidden=True)), pe(r"\A x : P(x)"))
        assert embed(o) == r"!!P. (!!x. P(x)) ==> \A x : P(x)"

    def test_empty_context_is_bare_expression(self):
        goal = r"\A x : x = x \/ TRUE"
        assert embed(Obligation((), pe(goal))) == goal

    def test_definition_binder(self):
        o = Obligation(
            (New("S"), Def("T", Obligation((), Ident("S")))), pe(r"T \subseteq S")
        )
        assert embed(o) == r"!!S. !!T. (T == S) ==> T \subseteq S"

    def test_lambda_definable(self):
        o = Obligation(
            (New("S"), Def("D", Lambda(("a", "b"), pe("a = b")))), pe("TRUE")
        )
        assert embed(o) == r"!!S. !!D. (D == \lambda a b. a = b) ==> TRUE"

    def test_hidden_and_usable_emit_identically(self):
        rng = random.Random(3)
        for _ in range(200):
            o = rand_obligation(rng)
            assert embed(o) == embed(Obligation(unhide(o.context), o.goal))

    def test_visibility_neutrality(self):
        rng = random.Random(4)
        for _ in range(200):
            o = rand_obligation(rng)
            names = {
                h.name for h in o.context if isinstance(h, Def) and rng.random() < 0.5
            }
            assert embed(Obligation(using_defs(o.context, names), o.goal)) == embed(o)
            assert embed(Obligation(hiding_defs(o.context, names), o.goal)) == embed(o)

    def test_not_well_formed_rejected(self):
        with pytest.raises(NotWellFormed):
            embed(Obligation((), pe("P(x)")))


class TestWellFormedness:
    def test_operations_preserve_well_formedness(self):
        rng = random.Random(5)
        for _ in range(200):
            o = rand_obligation(rng)
            check_well_formed(o)
            check_well_formed(Obligation(unhide(o.context), o.goal))
            names = {h.name for h in o.context if isinstance(h, Def)}
            check_well_formed(Obligation(using_defs(o.context, names), o.goal))
            check_well_formed(Obligation(hiding_defs(o.context, names), o.goal))
            check_well_formed(filter_obligation(o))

    def test_double_binding_rejected(self):
        with pytest.raises(NotWellFormed):
            check_well_formed(Obligation((New("x"), New("x")), pe("x = x")))

    def test_nested_contexts_may_shadow(self):
        inner = Obligation((New("x"),), pe("P(x)"))
        o = Obligation((New("P"), New("x"), Fact(inner)), pe("P(x)"))
        check_well_formed(o)

    def test_free_identifiers(self):
        o = Obligation((New("x"), fact(pe("Q(x, y)"))), pe("R(x)"))
        assert obligation_free_identifiers(o) == {"Q", "y", "R"}


class TestAlphaObligation:
    def test_renamed_declaration(self):
        a = Obligation((New("x"),), pe("x = x"))
        b = Obligation((New("y"),), pe("y = y"))
        assert alpha_equal_obligation(a, b)

    def test_hidden_flag_matters(self):
        a = Obligation((fact(pe("TRUE"), hidden=True),), pe("TRUE"))
        b = Obligation((fact(pe("TRUE")),), pe("TRUE"))
        assert not alpha_equal_obligation(a, b)

    def test_order_matters(self):
        a = Obligation((New("x"), New("y")), pe("x = y"))
        b = Obligation((New("y"), New("x")), pe("x = y"))
        # the two differ: the goal's first name refers to different positions
        assert alpha_equal_obligation(a, b) == alpha_equal_obligation(b, a)


class TestClosureExpression:
    def test_declarations_become_universals(self):
        o = Obligation((New("x"), fact(pe(r"x \in S"))), pe("f[x] # T"))
        assert obligation_to_expression(o) == pe(r"\A x : x \in S => f[x] # T")

    def test_definitions_expanded_away(self):
        o = Obligation(
            (New("S"), Def("T", Obligation((), Ident("S")))), pe(r"T \subseteq T")
        )
        assert obligation_to_expression(o) == pe(r"\A S : S \subseteq S")


def test_render_obligation_roundtrips_visibility_brackets():
    o = Obligation(
        (New("x"), fact(pe("P(x)"), hidden=True), Def("D", Obligation((), Ident("x")), hidden=True)),
        pe("P(x)"),
    )
    text = render_obligation(o)
    assert "[P(x)]" in text and "[D == x]" in text
