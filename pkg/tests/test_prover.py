"""Tableau prover: propositional and first-order search, equality, set
rules, trace replay, budgets."""

import random

import pytest

from helpers import rand_prop_sequent, truth_table_valid
from proofmgr.parser import parse_expression as pe
from proofmgr.prover import (
    Budget,
    Malformed,
    Proved,
    Sequent,
    Unknown,
    check_trace,
    normalize,
    prove,
    replay_trace,
    sequent_from_obligation,
)
from proofmgr.meta import Def, New, Obligation, fact
from proofmgr.syntax import Ident, Implies, In, Neg, Quant, Binder


BIG = Budget(max_depth=60, timeout_ms=20000, gamma_reuse=4)


def proved(seq: Sequent, budget: Budget = BIG) -> Proved:
    out = prove(seq, budget)
    assert isinstance(out, Proved), out
    return out


class TestNormalization:
    def test_bounded_forall(self):
        assert normalize(pe(r"\A x \in S : P(x)")) == pe(r"\A x : x \in S => P(x)")

    def test_bounded_exists(self):
        assert normalize(pe(r"\E x \in S : P(x)")) == pe(r"\E x : x \in S /\ P(x)")

    def test_multi_binder_nests(self):
        got = normalize(pe(r"\A x, y \in S : P(x, y)"))
        assert got == pe(r"\A x : \A y : y \in S => P(x, y)")

    def test_negative_relations(self):
        assert normalize(pe("a # b")) == Neg(pe("a = b"))
        assert normalize(pe(r"a \notin b")) == Neg(pe(r"a \in b"))


class TestPropositional:
    def test_excluded_middle_at_small_depth(self):
        out = prove(Sequent((), (), pe(r"P \/ ~P")), Budget(2, 5000, 1))
        assert isinstance(out, Proved)

    def test_modus_ponens(self):
        proved(Sequent((), (pe("P"), pe("P => Q")), pe("Q")))

    def test_iff_unfolds(self):
        proved(Sequent((), (pe("P <=> Q"), pe("Q")), pe("P")))

    def test_invalid_is_unknown_not_proved(self):
        out = prove(Sequent((), (), pe("P => Q")), BIG)
        assert isinstance(out, Unknown)

    def test_false_hypothesis_closes(self):
        proved(Sequent((), (pe("FALSE"),), pe("P")))

    def test_goal_true_closes(self):
        proved(Sequent((), (), pe("TRUE")))

    def test_oracle_agreement_sample(self):
        rng = random.Random(23)
        for _ in range(120):
            seq = rand_prop_sequent(rng)
            out = prove(seq, BIG)
            assert not isinstance(out, Malformed)
            assert isinstance(out, Proved) == truth_table_valid(seq), seq


class TestFirstOrder:
    def test_universal_instantiation(self):
        proved(
            Sequent(
                ("S", "P", "c"),
                (pe(r"\A x \in S : P(x)"), pe(r"c \in S")),
                pe("P(c)"),
            )
        )

    def test_existential_witness_via_unification(self):
        proved(Sequent(("S", "c"), (pe(r"c \in S"),), pe(r"\E x : x \in S")))

    def test_quantifier_swap_invalid_direction_unknown(self):
        seq = Sequent(
            ("P",),
            (pe(r"\A x : \E y : P(x, y)"),),
            pe(r"\E y : \A x : P(x, y)"),
        )
        out = prove(seq, Budget(10, 3000, 2))
        assert isinstance(out, Unknown)

    def test_nested_quantifier_goal(self):
        proved(
            Sequent(
                ("P",),
                (pe(r"\A x : \A y : P(x, y)"),),
                pe(r"\A y : \A x : P(x, y)"),
            )
        )


class TestEquality:
    def test_reflexivity(self):
        proved(Sequent(("c",), (), pe("c = c")))

    def test_congruence_through_application(self):
        proved(Sequent(("f", "a", "b"), (pe("a = b"),), pe("f[a] = f[b]")))

    def test_chained_equalities(self):
        proved(
            Sequent(
                ("a", "b", "c", "P"),
                (pe("a = b"), pe("b = c"), pe("P(a)")),
                pe("P(c)"),
            )
        )

    def test_membership_modulo_equality(self):
        proved(
            Sequent(("a", "b", "S"), (pe("a = b"), pe(r"a \in S")), pe(r"b \in S"))
        )


class TestSetRules:
    def test_comprehension_forward(self):
        proved(
            Sequent(
                ("S", "c"),
                (pe(r"c \in {z \in S : z # c}"),),
                pe(r"c \in S"),
            )
        )

    def test_comprehension_backward(self):
        proved(
            Sequent(
                ("S", "P", "c"),
                (pe(r"c \in S"), pe("P(c)")),
                pe(r"c \in {z \in S : P(z)}"),
            )
        )

    def test_image_set_membership(self):
        proved(
            Sequent(
                ("S", "f", "c"),
                (pe(r"c \in S"),),
                pe(r"f[c] \in {f[x] : x \in S}"),
            )
        )

    def test_image_set_elimination(self):
        proved(
            Sequent(
                ("S", "f", "P", "e"),
                (pe(r"e \in {f[x] : x \in S}"), pe(r"\A y \in S : P(f[y])")),
                pe("P(e)"),
            )
        )

    def test_subset_reflexive(self):
        proved(Sequent(("S",), (), pe(r"S \subseteq S")))

    def test_subset_transitive(self):
        proved(
            Sequent(
                ("A", "B", "C"),
                (pe(r"A \subseteq B"), pe(r"B \subseteq C")),
                pe(r"A \subseteq C"),
            )
        )

    def test_powerset_membership(self):
        proved(Sequent(("S",), (), pe(r"S \in SUBSET S")))

    def test_function_space_application(self):
        proved(
            Sequent(
                ("S", "T", "f", "c"),
                (pe(r"f \in [S -> T]"), pe(r"c \in S")),
                pe(r"f[c] \in T"),
            )
        )

    def test_extensionality_on_goal_equality(self):
        proved(Sequent(("S",), (), pe(r"{z \in S : TRUE} = S")))

    def test_empty_set_goal_stays_unknown(self):
        # {} is an uninterpreted constant: no rule sequence within the budget
        # can close the tableau, so the search must exhaust
        out = prove(Sequent((), (), pe(r"\E x : x \in {}")), Budget(6, 5000, 2))
        assert isinstance(out, Unknown)
        assert out.reason == "exhausted"

    def test_cantor_diagonal(self):
        T = r"{z \in S : z \notin f[z]}"
        proved(
            Sequent(
                ("S", "f"),
                (pe(r"f \in [S -> SUBSET S]"), pe(rf"\A x \in S : f[x] # {T}")),
                pe(r"\E A \in SUBSET S : \A x \in S : f[x] # A"),
            ),
            Budget(12, 10000, 4),
        )


class TestTraces:
    def test_every_proved_trace_replays(self):
        rng = random.Random(29)
        for _ in range(60):
            seq = rand_prop_sequent(rng)
            out = prove(seq, BIG)
            if isinstance(out, Proved):
                assert check_trace(seq, out.trace)

    def test_trace_is_lines_of_rule_applications(self):
        out = proved(Sequent((), (pe("P"), pe("P => Q")), pe("Q")))
        for line in out.trace.strip().splitlines():
            fields = line.split("\t")
            assert fields[0] in {
                "alpha", "beta", "gamma", "delta", "close", "close-eq",
                "close-false", "subset-of", "subset-of-neg", "set-of-all",
                "set-of-all-neg", "power-set", "power-set-neg", "subseteq",
                "subseteq-neg", "func-space", "extensionality", "rewrite",
            }
            int(fields[1])  # principal index

    def test_deleting_a_closure_step_fails_replay(self):
        seq = Sequent((), (pe("P"), pe("P => Q")), pe("Q"))
        out = proved(seq)
        lines = out.trace.strip().splitlines()
        closures = [i for i, l in enumerate(lines) if l.startswith("close")]
        mutated = "\n".join(l for i, l in enumerate(lines) if i != closures[-1])
        result = replay_trace(seq, mutated)
        assert not result.ok and result.error

    def test_altered_gamma_instantiation_fails_replay(self):
        seq = Sequent(
            ("S", "P", "c"),
            (pe(r"\A x \in S : P(x)"), pe(r"c \in S")),
            pe("P(c)"),
        )
        out = proved(seq)
        lines = out.trace.strip().splitlines()
        mutated = []
        changed = False
        for line in lines:
            fields = line.split("\t")
            if not changed and fields[0] == "close" and fields[-1]:
                # tamper with the recorded unifier binding
                fields[-1] = fields[-1].replace(":= c", ":= S")
                changed = True
            mutated.append("\t".join(fields))
        assert changed
        assert not check_trace(seq, "\n".join(mutated))

    def test_foreign_trace_rejected_with_diagnostic(self):
        seq = Sequent((), (), pe("TRUE"))
        result = replay_trace(seq, "alpha\t0\t1:nonsense")
        assert not result.ok
        assert "line 1" in result.error

    def test_golden_trace_text(self):
        # the trace serialization is normative: pin one closed tableau
        out = proved(Sequent((), (), pe(r"P \/ ~P")))
        assert out.trace == "alpha\t0\t1:~P\t2:~(~P)\nclose\t1\t2\t\n"


class TestBudgets:
    def test_fields_must_be_positive(self):
        with pytest.raises(ValueError):
            Budget(0, 1000, 1)
        with pytest.raises(ValueError):
            Budget(5, -1, 1)

    def test_monotonic_in_depth(self):
        rng = random.Random(31)
        sequents = [rand_prop_sequent(rng) for _ in range(40)]
        for seq in sequents:
            results = [
                isinstance(prove(seq, Budget(d, 20000, 4)), Proved)
                for d in (4, 10, 24)
            ]
            for small, big in zip(results, results[1:]):
                assert not (small and not big)

    def test_timeout_reports_unknown(self):
        T = r"{z \in S : z \notin f[z]}"
        seq = Sequent(
            ("S", "f"),
            (pe(r"f \in [S -> SUBSET S]"), pe(rf"\A x \in S : f[x] # {T}")),
            pe(r"\E A \in SUBSET S : \A x \in S : f[x] # A"),
        )
        out = prove(seq, Budget(12, 1, 4))
        assert isinstance(out, Unknown) and out.reason == "timeout"

    def test_determinism(self):
        rng = random.Random(37)
        for _ in range(20):
            seq = rand_prop_sequent(rng)
            a = prove(seq, BIG)
            b = prove(seq, BIG)
            assert type(a) is type(b)
            if isinstance(a, Proved):
                assert a.trace == b.trace


class TestMalformed:
    def test_reserved_names_rejected(self):
        out = prove(Sequent((), (), In(Ident("?1"), Ident("S"))))
        assert isinstance(out, Malformed)

    def test_sequent_from_unfiltered_obligation_rejected(self):
        o = Obligation((New("x"), fact(pe("P(x)"), hidden=True)), pe("P(x)"))
        with pytest.raises(ValueError):
            sequent_from_obligation(o)

    def test_sequent_from_unexpanded_obligation_rejected(self):
        o = Obligation(
            (New("S"), Def("T", Obligation((), Ident("S")))), pe(r"T \subseteq S")
        )
        with pytest.raises(ValueError):
            sequent_from_obligation(o)

    def test_sequent_construction(self):
        o = Obligation(
            (New("x"), fact(Obligation((New("y"),), pe("Q(y, x)")))), pe("R(x)")
        )
        seq = sequent_from_obligation(o)
        assert seq.constants == ("x",)
        assert seq.hypotheses == (Quant("forall", (Binder("y"),), pe("Q(y, x)")),)
        assert seq.goal == pe("R(x)")
