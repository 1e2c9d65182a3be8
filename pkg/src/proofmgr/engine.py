"""Checking and transformation rules: proofs to derivations and leaf obligations.

A claim (a proof against an obligation) is checked by recursively refining
the obligation through each proof step.  Each step either matches the shape
of exactly one rule, producing an output obligation, side leaf obligations
and subclaims, or the claim is meaningless at that step.

Named assertion steps bind their label as an operator whose definable is the
asserted obligation, and the fact of the label is added hidden; the subproof
context receives the hidden negation of the current goal immediately before
the label definition.  The checker for a whole theorem suppresses that
negated-goal assumption for the steps of the theorem's top-level sequence
only (a claim checked directly always receives it).

After a meaningless step, checking continues with the unrefined obligation so
that several errors can be reported in one run.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .meta import (
    Def,
    DuplicateName,
    Fact,
    Lambda,
    MetaError,
    New,
    Obligation,
    UnknownFact,
    check_well_formed,
    context_binds,
    fact,
    hiding_defs,
    obligation_free_identifiers,
    unhide,
    using_defs,
)
from .parser import (
    AssertStep,
    Binder,
    By,
    CaseStep,
    DefineStep,
    FactItem,
    GoalForm,
    HaveStep,
    NewItem,
    NonLeaf,
    Obvious,
    Omitted,
    PickStep,
    Proof,
    ProofStep,
    QedStep,
    Step,
    SufficesStep,
    TakeStep,
    Theorem,
    UseHideStep,
    WitnessStep,
    BeginStepToken,
)
from .syntax import (
    Expr,
    Ident,
    Implies,
    In,
    Neg,
    OpApp,
    Pos,
    Quant,
    Subseteq,
    alpha_equal,
    free_identifiers,
    fresh_name,
    pretty,
    subst_many,
    substitute,
)

Path = tuple[str, ...]


class MeaninglessError(Exception):
    def __init__(self, message: str, path: Path, obligation: Obligation):
        super().__init__(f"{'.'.join(path) or '(root)'}: {message}")
        self.message = message
        self.path = path
        self.obligation = obligation


@dataclass(frozen=True)
class StepError:
    path: Path
    message: str
    obligation: Obligation
    span: Optional[Pos] = None


@dataclass(frozen=True)
class LeafObligationRecord:
    obligation: Obligation
    path: Path
    kind: str
    omitted: bool = False
    span: Optional[Pos] = None


@dataclass(frozen=True)
class Derivation:
    rule: str
    input: Obligation
    output: Optional[Obligation]
    path: Path
    children: tuple["Derivation", ...] = ()
    leaves: tuple[LeafObligationRecord, ...] = ()
    error: Optional[StepError] = None
    span: Optional[Pos] = None


def leaf_obligations(d: Derivation) -> list[LeafObligationRecord]:
    """Leaf records in derivation order: each node's subclaims and side
    premises come before its own goal leaves."""
    out: list[LeafObligationRecord] = []

    def walk(node: Derivation) -> None:
        for c in node.children:
            walk(c)
        out.extend(node.leaves)

    walk(d)
    return out


def derivation_errors(d: Derivation) -> list[StepError]:
    out: list[StepError] = []

    def walk(node: Derivation) -> None:
        if node.error is not None:
            out.append(node.error)
        for c in node.children:
            walk(c)

    walk(d)
    return out


# ---------------------------------------------------------------------------
# Goal-form reflection


def goal_form_obligation(gf: GoalForm) -> Obligation:
    """The obligation a goal form denotes (context fragment plus goal)."""
    ctx: list = []
    seen: set[str] = set()
    for item in gf.assumes:
        match item:
            case NewItem(name, domain):
                if name in seen:
                    raise DuplicateName(f"{name} declared twice")
                seen.add(name)
                ctx.append(New(name))
                if domain is not None:
                    ctx.append(fact(In(Ident(name), domain)))
            case FactItem(expr):
                ctx.append(fact(expr))
    return Obligation(tuple(ctx), gf.goal)


def _splice_fragment(
    ctx_binds: set[str], fragment: Obligation
) -> tuple[tuple, Expr]:
    """Rename the fragment's declarations apart from the enclosing context,
    substituting through its facts and goal."""
    mapping: dict[str, Expr] = {}
    out: list = []
    taken = set(ctx_binds) | set(obligation_free_identifiers(fragment))
    for h in fragment.context:
        match h:
            case New(name):
                if name in taken:
                    renamed = fresh_name(name, taken)
                    mapping[name] = Ident(renamed)
                    taken.add(renamed)
                    out.append(New(renamed))
                else:
                    taken.add(name)
                    out.append(New(name))
            case Fact(obl, hidden):
                if mapping and not obl.context:
                    out.append(Fact(Obligation((), subst_many(obl.goal, mapping)), hidden))
                else:
                    out.append(Fact(obl, hidden))
            case _:
                out.append(h)
    goal = subst_many(fragment.goal, mapping) if mapping else fragment.goal
    return tuple(out), goal


# ---------------------------------------------------------------------------
# Goal-head expansion for matching


def expand_for_matching(o: Obligation) -> Obligation:
    """Expand usable definitions at the head of the goal just far enough to
    expose a quantifier or implication; hidden definitions never expand."""
    defs = {
        h.name: h.definable
        for h in o.context
        if isinstance(h, Def) and not h.hidden
    }
    goal = o.goal
    for _ in range(len(defs) + 1):
        if isinstance(goal, (Quant, Implies)):
            break
        match goal:
            case Ident(name) if name in defs:
                d = defs[name]
                if isinstance(d, Lambda):
                    break  # needs arguments; leave for the caller to reject
                from .meta import obligation_to_expression

                goal = obligation_to_expression(d)
            case OpApp(name, args) if name in defs:
                d = defs[name]
                if not isinstance(d, Lambda) or len(d.params) != len(args):
                    break
                goal = subst_many(d.body, dict(zip(d.params, args)))
            case _:
                break
    if goal is o.goal:
        return o
    return Obligation(o.context, goal)


def _peel(q: Quant, replacement: Expr) -> Expr:
    first = q.binders[0]
    rest = q.binders[1:]
    inner: Expr = q.body if not rest else Quant(q.kind, rest, q.body)
    return substitute(inner, first.name, replacement)


def _require_closed(e: Expr, ctx: Obligation, what: str, path: Path) -> None:
    """A step may only mention names the context binds; anything else would
    leak an unbound identifier into a leaf obligation."""
    loose = free_identifiers(e) - context_binds(ctx.context)
    if loose:
        raise MeaninglessError(
            f"{what} mentions {', '.join(sorted(loose))}, not bound in the context",
            path,
            ctx,
        )


def _require_closed_obligation(o: Obligation, ctx: Obligation, what: str, path: Path) -> None:
    loose = obligation_free_identifiers(o) - context_binds(ctx.context)
    if loose:
        raise MeaninglessError(
            f"{what} mentions {', '.join(sorted(loose))}, not bound in the context",
            path,
            ctx,
        )


# ---------------------------------------------------------------------------
# The checker


@dataclass(frozen=True)
class StepOutcome:
    output: Obligation
    node: Derivation


@dataclass(frozen=True)
class CheckedTheorem:
    theorem: Theorem
    root: Obligation
    derivation: Derivation
    records: tuple[LeafObligationRecord, ...]
    errors: tuple[StepError, ...]
    warnings: tuple[str, ...]

    @property
    def meaningful(self) -> bool:
        return not self.errors

    @property
    def complete(self) -> bool:
        return not any(r.omitted for r in self.records)


class _Checker:
    def __init__(self, local_defs_usable: bool = True):
        self.local_defs_usable = local_defs_usable
        self.warnings: list[str] = []

    # -- claims ---------------------------------------------------------

    def check(
        self,
        proof: Proof,
        obl: Obligation,
        path: Path,
        suppress_neg: bool = False,
        goal_kind: str = "obvious-goal",
    ) -> Derivation:
        match proof:
            case Obvious():
                leaf = LeafObligationRecord(obl, path, goal_kind, span=proof.pos)
                return Derivation("obvious", obl, None, path, leaves=(leaf,), span=proof.pos)
            case Omitted():
                leaf = LeafObligationRecord(obl, path, goal_kind, omitted=True, span=proof.pos)
                return Derivation("omitted", obl, None, path, leaves=(leaf,), span=proof.pos)
            case By(facts, defs):
                use = Step(
                    BeginStepToken(0, None, pos=proof.pos),
                    UseHideStep(facts, defs, hide=False),
                )
                try:
                    outcome = self._use_hide(use.token, use.body, obl, path)
                except (MeaninglessError, MetaError) as err:
                    return self._error_node("by", obl, path, proof.pos, err)
                kind = "by-goal" if goal_kind == "obvious-goal" else goal_kind
                leaf = LeafObligationRecord(outcome.output, path, kind, span=proof.pos)
                return Derivation(
                    "by", obl, None, path, children=(outcome.node,), leaves=(leaf,), span=proof.pos
                )
            case NonLeaf(steps):
                return self._sequence(list(steps), obl, path, suppress_neg)
        raise TypeError(type(proof).__name__)

    def _sequence(
        self, steps: list[Step], obl: Obligation, path: Path, suppress_neg: bool
    ) -> Derivation:
        if not steps:
            raise MeaninglessError("empty step sequence", path, obl)
        step, rest = steps[0], steps[1:]
        token = step.token
        if isinstance(step.body, QedStep):
            sub = self.check(step.body.proof, obl, path + (token.name,), False)
            return Derivation(
                "qed", obl, None, path + (token.name,), children=(sub,), span=step.pos
            )
        if not rest:
            err = MeaninglessError(
                f"step {token.name} is not QED but ends its sequence", path, obl
            )
            return self._error_node("step", obl, path + (token.name,), step.pos, err)
        try:
            outcome = self.transform(token, step.body, obl, path, suppress_neg)
            nodes = (outcome.node,)
            nxt = outcome.output
        except (MeaninglessError, MetaError) as err:
            nodes = (self._error_node("step", obl, path + (token.name,), step.pos, err),)
            nxt = obl  # recovery: siblings continue with the unrefined obligation
        rest_node = self._sequence(rest, nxt, path, suppress_neg)
        return Derivation(
            "step", obl, nxt, path + (token.name,), children=nodes + (rest_node,), span=step.pos
        )

    def _error_node(self, rule, obl, path, span, err) -> Derivation:
        msg = getattr(err, "message", str(err))
        return Derivation(
            rule, obl, None, path,
            error=StepError(path, msg, obl, span), span=span,
        )

    # -- transformations --------------------------------------------------

    def transform(
        self,
        token: BeginStepToken,
        body: ProofStep,
        obl: Obligation,
        path: Path,
        suppress_neg: bool = False,
    ) -> StepOutcome:
        spath = path + (token.name,)
        match body:
            case UseHideStep():
                return self._use_hide(token, body, obl, path)
            case DefineStep():
                return self._define(token, body, obl, spath)
            case HaveStep(g):
                return self._have(g, obl, spath)
            case TakeStep(binders):
                return self._take(binders, obl, spath)
            case WitnessStep(items):
                return self._witness(items, obl, spath)
            case AssertStep(gf, proof):
                return self._assert(token, gf, proof, obl, path, suppress_neg)
            case CaseStep(g, proof):
                gf = GoalForm((FactItem(g),), obl.goal)
                return self._assert(token, gf, proof, obl, path, suppress_neg, rule="case")
            case SufficesStep(gf, proof):
                return self._suffices(token, gf, proof, obl, path, suppress_neg)
            case PickStep(binders, pbody, proof):
                return self._pick(token, binders, pbody, proof, obl, path)
            case QedStep():
                raise MeaninglessError("QED before the end of its sequence", spath, obl)
        raise TypeError(type(body).__name__)

    def _use_hide(self, token, body: UseHideStep, obl, path) -> StepOutcome:
        # the internal <0> token of an elaborated BY does not appear in paths
        spath = path + (token.name,) if token.level > 0 else path
        known = {h.name for h in obl.context if isinstance(h, Def)}
        for name in body.defs:
            if name not in known:
                self.warnings.append(
                    f"{'.'.join(spath)}: no definition named {name} in the context"
                )
        if not body.hide:
            ctx = using_defs(obl.context, body.defs)
            start = Obligation(ctx, obl.goal)
            rule = "use-defs" if body.defs else "use"
            inner, output = self._use_fold(list(body.facts), start, spath)
            if body.defs:
                node = Derivation(rule, obl, output, spath, children=(inner,), span=token.pos)
            else:
                node = inner
            return StepOutcome(output, node)
        inner, mid = self._hide_fold(list(body.facts), obl, spath)
        output = Obligation(hiding_defs(mid.context, body.defs), mid.goal)
        if body.defs:
            node = Derivation("hide-defs", obl, output, spath, children=(inner,), span=token.pos)
        else:
            node = inner
        return StepOutcome(output, node)

    def _use_fold(self, facts, obl, spath) -> tuple[Derivation, Obligation]:
        if not facts:
            return Derivation("use-nil", obl, obl, spath), obl
        inner, mid = self._use_fold(facts[:-1], obl, spath)
        cited = facts[-1]
        _require_closed(cited, mid, "cited fact", spath)
        side = Obligation(unhide(mid.context), cited)
        leaf = LeafObligationRecord(side, spath, "use-fact-side")
        output = Obligation(mid.context + (fact(cited),), mid.goal)
        node = Derivation(
            "use", obl, output, spath, children=(inner,), leaves=(leaf,)
        )
        return node, output

    def _hide_fold(self, facts, obl, spath) -> tuple[Derivation, Obligation]:
        if not facts:
            return Derivation("hide-nil", obl, obl, spath), obl
        inner, mid = self._hide_fold(facts[:-1], obl, spath)
        cited = facts[-1]
        idx = None
        for k in range(len(mid.context) - 1, -1, -1):
            h = mid.context[k]
            if (
                isinstance(h, Fact)
                and not h.hidden
                and not h.obligation.context
                and alpha_equal(h.obligation.goal, cited)
            ):
                idx = k
                break
        if idx is None:
            raise UnknownFact(f"no usable fact {pretty(cited)} to hide")
        ctx = list(mid.context)
        ctx[idx] = Fact(mid.context[idx].obligation, hidden=True)  # type: ignore[union-attr]
        output = Obligation(tuple(ctx), mid.goal)
        node = Derivation("hide", obl, output, spath, children=(inner,))
        return node, output

    def _define(self, token, body: DefineStep, obl, spath) -> StepOutcome:
        if body.name in context_binds(obl.context):
            raise DuplicateName(f"{body.name} is already bound in the context")
        loose = free_identifiers(body.body) - context_binds(obl.context) - set(body.params)
        if loose:
            raise MeaninglessError(
                f"definition body mentions {', '.join(sorted(loose))}, "
                "not bound in the context",
                spath,
                obl,
            )
        definable: Union[Obligation, Lambda]
        if body.params:
            definable = Lambda(body.params, body.body)
        else:
            definable = Obligation((), body.body)
        output = Obligation(
            obl.context + (Def(body.name, definable, hidden=True),), obl.goal
        )
        node = Derivation("define", obl, output, spath, span=token.pos)
        if not self.local_defs_usable:
            return StepOutcome(output, node)
        # proof-local definitions are usable by default: lower to an
        # immediate synthetic USE DEF of the new name
        used = Obligation(using_defs(output.context, (body.name,)), output.goal)
        use_node = Derivation("use-defs", output, used, spath, children=(
            Derivation("use-nil", used, used, spath),
        ))
        wrapper = Derivation(
            "define", obl, used, spath, children=(node, use_node), span=token.pos
        )
        return StepOutcome(used, wrapper)

    def _have(self, g: Expr, obl, spath) -> StepOutcome:
        _require_closed(g, obl, "HAVE fact", spath)
        matched = expand_for_matching(obl)
        if not isinstance(matched.goal, Implies):
            raise MeaninglessError(
                f"HAVE requires an implication goal, got {pretty(obl.goal)}",
                spath,
                obl,
            )
        e, f = matched.goal.left, matched.goal.right
        side = Obligation(obl.context + (fact(e),), g)
        leaf = LeafObligationRecord(side, spath, "have-side")
        output = Obligation(obl.context + (fact(g),), f)
        node = Derivation("have", obl, output, spath, leaves=(leaf,))
        return StepOutcome(output, node)

    def _take(self, binders, obl, spath) -> StepOutcome:
        if not binders:
            return StepOutcome(obl, Derivation("take-nil", obl, obl, spath))
        b, rest = binders[0], binders[1:]
        if b.domain is not None:
            _require_closed(b.domain, obl, "TAKE bound", spath)
        matched = expand_for_matching(obl)
        goal = matched.goal
        if not (isinstance(goal, Quant) and goal.kind == "forall"):
            raise MeaninglessError(
                f"TAKE requires a universally quantified goal, got {pretty(obl.goal)}",
                spath,
                obl,
            )
        first = goal.binders[0]
        if (b.domain is None) != (first.domain is None):
            want = "bounded" if b.domain is not None else "unbounded"
            raise MeaninglessError(
                f"TAKE {b.name} is {want} but the goal binder is not", spath, obl
            )
        taken = context_binds(obl.context) | obligation_free_identifiers(obl)
        name = fresh_name(b.name, taken)
        leaves: tuple[LeafObligationRecord, ...] = ()
        if b.domain is None:
            ctx = obl.context + (New(name),)
        else:
            side = Obligation(obl.context, Subseteq(first.domain, b.domain))
            leaves = (LeafObligationRecord(side, spath, "take-subset-side"),)
            ctx = obl.context + (New(name), fact(In(Ident(name), b.domain)))
        mid = Obligation(ctx, _peel(goal, Ident(name)))
        inner = self._take(rest, mid, spath)
        node = Derivation(
            "take", obl, inner.output, spath, children=(inner.node,), leaves=leaves
        )
        return StepOutcome(inner.output, node)

    def _witness(self, items, obl, spath) -> StepOutcome:
        if not items:
            return StepOutcome(obl, Derivation("witness-nil", obl, obl, spath))
        w, rest = items[0], items[1:]
        _require_closed(w.expr, obl, "witness", spath)
        if w.domain is not None:
            _require_closed(w.domain, obl, "witness bound", spath)
        matched = expand_for_matching(obl)
        goal = matched.goal
        if not (isinstance(goal, Quant) and goal.kind == "exists"):
            raise MeaninglessError(
                f"WITNESS requires an existentially quantified goal, got {pretty(obl.goal)}",
                spath,
                obl,
            )
        first = goal.binders[0]
        if (w.domain is None) != (first.domain is None):
            want = "bounded" if w.domain is not None else "unbounded"
            raise MeaninglessError(
                f"WITNESS {pretty(w.expr)} is {want} but the goal binder is not",
                spath,
                obl,
            )
        leaves: tuple[LeafObligationRecord, ...] = ()
        ctx = obl.context
        if w.domain is not None:
            subset = Obligation(obl.context, Subseteq(w.domain, first.domain))
            member = Obligation(obl.context, In(w.expr, w.domain))
            leaves = (
                LeafObligationRecord(subset, spath, "witness-subset-side"),
                LeafObligationRecord(member, spath, "witness-membership-side"),
            )
            ctx = ctx + (fact(In(w.expr, w.domain)),)
        mid = Obligation(ctx, _peel(goal, w.expr))
        inner = self._witness(rest, mid, spath)
        node = Derivation(
            "witness", obl, inner.output, spath, children=(inner.node,), leaves=leaves
        )
        return StepOutcome(inner.output, node)

    def _assert(
        self, token, gf: GoalForm, proof, obl, path, suppress_neg, rule="assert"
    ) -> StepOutcome:
        spath = path + (token.name,)
        alpha = goal_form_obligation(gf)
        _require_closed_obligation(alpha, obl, "asserted claim", spath)
        neg: tuple = () if suppress_neg else (fact(Neg(obl.goal), hidden=True),)
        if token.label is None:
            fragment, goal = _splice_fragment(context_binds(obl.context), alpha)
            sub_obl = Obligation(obl.context + neg + fragment, goal)
            output = Obligation(obl.context + (Fact(alpha),), obl.goal)
            rule_name = rule if rule == "case" else "assert1"
        else:
            label = token.name
            if label in context_binds(obl.context):
                raise DuplicateName(f"step label {label} is already bound")
            label_def = Def(label, alpha)
            fragment, goal = _splice_fragment(
                context_binds(obl.context) | {label}, alpha
            )
            sub_obl = Obligation(obl.context + neg + (label_def,) + fragment, goal)
            output = Obligation(
                obl.context + (label_def, Fact(Obligation((), Ident(label)), hidden=True)),
                obl.goal,
            )
            rule_name = rule if rule == "case" else "assert2"
        sub = self.check(proof, sub_obl, spath, False)
        node = Derivation(
            rule_name, obl, output, spath, children=(sub,), span=token.pos
        )
        return StepOutcome(output, node)

    def _suffices(self, token, gf, proof, obl, path, suppress_neg) -> StepOutcome:
        spath = path + (token.name,)
        alpha = goal_form_obligation(gf)
        _require_closed_obligation(alpha, obl, "SUFFICES claim", spath)
        neg: tuple = () if suppress_neg else (fact(Neg(obl.goal), hidden=True),)
        if token.label is None:
            sub_obl = Obligation(obl.context + (Fact(alpha),), obl.goal)
            fragment, goal = _splice_fragment(context_binds(obl.context), alpha)
            output = Obligation(obl.context + neg + fragment, goal)
            rule_name = "suffices1"
        else:
            label = token.name
            if label in context_binds(obl.context):
                raise DuplicateName(f"step label {label} is already bound")
            label_def = Def(label, alpha)
            sub_obl = Obligation(
                obl.context + (label_def, Fact(Obligation((), Ident(label)), hidden=True)),
                obl.goal,
            )
            fragment, goal = _splice_fragment(
                context_binds(obl.context) | {label}, alpha
            )
            output = Obligation(obl.context + neg + (label_def,) + fragment, goal)
            rule_name = "suffices2"
        sub = self.check(proof, sub_obl, spath, False)
        node = Derivation(
            rule_name, obl, output, spath, children=(sub,), span=token.pos
        )
        return StepOutcome(output, node)

    def _pick(self, token, binders, pbody, proof, obl, path) -> StepOutcome:
        spath = path + (token.name,)
        from .meta import reflect_binders

        for b in binders:
            if b.domain is not None:
                _require_closed(b.domain, obl, "PICK bound", spath)
        loose = (
            free_identifiers(pbody)
            - context_binds(obl.context)
            - {b.name for b in binders}
        )
        if loose:
            raise MeaninglessError(
                f"PICK body mentions {', '.join(sorted(loose))}, "
                "not bound in the context",
                spath,
                obl,
            )
        existence = Obligation(obl.context, Quant("exists", tuple(binders), pbody))
        sub = self.check(proof, existence, spath, False, goal_kind="pick-existence")
        taken = context_binds(obl.context) | obligation_free_identifiers(obl)
        mapping: dict[str, Expr] = {}
        renamed: list[Binder] = []
        for b in binders:
            dom = b.domain
            if dom is not None and mapping:
                dom = subst_many(dom, mapping)
            if b.name in taken:
                fresh = fresh_name(b.name, taken)
                mapping[b.name] = Ident(fresh)
                taken.add(fresh)
                renamed.append(Binder(fresh, dom))
            else:
                taken.add(b.name)
                renamed.append(Binder(b.name, dom))
        body = subst_many(pbody, mapping) if mapping else pbody
        output = Obligation(
            obl.context + reflect_binders(renamed) + (fact(body),), obl.goal
        )
        node = Derivation("pick", obl, output, spath, children=(sub,), span=token.pos)
        return StepOutcome(output, node)


# ---------------------------------------------------------------------------
# Public entry points


def check_claim(
    proof: Proof,
    obligation: Obligation,
    *,
    collect_errors: bool = False,
    local_defs_usable: bool = True,
) -> Derivation:
    """Check a proof against an obligation, producing its derivation.

    Raises MeaninglessError at the first non-matching step unless
    collect_errors is set, in which case error nodes are embedded and
    checking continues with unrefined obligations.
    """
    checker = _Checker(local_defs_usable)
    derivation = checker.check(proof, obligation, ())
    if not collect_errors:
        errors = derivation_errors(derivation)
        if errors:
            first = errors[0]
            raise MeaninglessError(first.message, first.path, first.obligation)
    return derivation


def transform_step(
    token: BeginStepToken,
    body: ProofStep,
    obligation: Obligation,
    *,
    local_defs_usable: bool = True,
) -> StepOutcome:
    """Apply one proof step to an obligation; the outcome carries the output
    obligation and the transformation's derivation node."""
    checker = _Checker(local_defs_usable)
    return checker.transform(token, body, obligation, ())


def theorem_obligation(thm: Theorem) -> Obligation:
    return goal_form_obligation(thm.goal_form)


def check_theorem(thm: Theorem, *, local_defs_usable: bool = True) -> CheckedTheorem:
    """Check a theorem's proof against its root obligation.

    The root obligation must be closed; steps of the top-level sequence do
    not receive the hidden negated goal.
    """
    root = theorem_obligation(thm)
    check_well_formed(root)
    checker = _Checker(local_defs_usable)
    derivation = checker.check(thm.proof, root, (), suppress_neg=True)
    records = tuple(leaf_obligations(derivation))
    errors = tuple(derivation_errors(derivation))
    return CheckedTheorem(
        thm, root, derivation, records, errors, tuple(checker.warnings)
    )
