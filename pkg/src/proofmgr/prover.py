"""Iterative-deepening free-variable tableau for classical first-order logic
with equality, extended with set-construct expansion rules.

The prover refutes hypotheses plus the negated goal.  Rules:

* alpha/beta propositional expansion (iff unfolds to the two implications
  when positive and branches on the two conjunctions when negated);
* gamma: universals instantiated with fresh metavariables (``?k``), reused up
  to the budget's per-formula cap per branch;
* delta: existentials instantiated with skolem terms (``!skk``) over the
  metavariables of the formula;
* closure by unification of complementary formulas, of a negated reflexive
  equality, or by ground congruence closure over the branch's equalities;
* set rules: membership in a bounded comprehension, an image set, a powerset
  or a function space unfolds per construct; the subset relation unfolds to
  its bounded-universal definition; extensionality fires once per branch on a
  negated equality whose side is a set-shaped term; a bounded rewrite step
  re-exposes a set shape hidden behind a branch equality.

Bounded quantifiers and the negative relation forms are normalized away on
entry (``\\A x \\in S : e`` to ``\\A x : x \\in S => e``, dually for ``\\E``;
``#`` and ``\\notin`` to negations).

Traces are line-oriented and replayable: one rule application per line, as
tab-separated fields ``rule``, ``principal index``, then the introduced
``index:formula`` entries (a gamma or delta line carries the introduced name
before the formula).  A ``close`` line names the complementary pair and the
unifier bindings.  Replay maintains a stack of open branches: expansions
extend the current branch; ``beta`` continues on its second introduced
formula and pushes a branch for the first (the second part of a branching
rule usually constrains the metavariables its side condition needs);
``close*`` pops.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Union

from . import syntax as s
from .meta import Def, Fact, New, Obligation, obligation_to_expression
from .syntax import Binder, Expr, Ident, Neg, OpApp, Quant, free_identifiers, pretty


@dataclass(frozen=True)
class Budget:
    max_depth: int = 12
    timeout_ms: int = 5000
    gamma_reuse: int = 4

    def __post_init__(self) -> None:
        if self.max_depth <= 0 or self.timeout_ms <= 0 or self.gamma_reuse <= 0:
            raise ValueError("budget fields must be positive")


@dataclass(frozen=True)
class Sequent:
    constants: tuple[str, ...]
    hypotheses: tuple[Expr, ...]
    goal: Expr


@dataclass(frozen=True)
class Stats:
    iterations: int = 0
    expansions: int = 0
    closures: int = 0


@dataclass(frozen=True)
class Proved:
    trace: str


@dataclass(frozen=True)
class Unknown:
    reason: str
    stats: Stats = field(default_factory=Stats)


@dataclass(frozen=True)
class Malformed:
    reason: str


ProverOutcome = Union[Proved, Unknown, Malformed]


def sequent_from_obligation(o: Obligation) -> Sequent:
    """Prover normal form of a filtered, definition-expanded obligation."""
    constants: list[str] = []
    hyps: list[Expr] = []
    for h in o.context:
        match h:
            case New(name):
                constants.append(name)
            case Fact(obl, hidden):
                if hidden:
                    raise ValueError("sequent built from unfiltered obligation")
                hyps.append(obligation_to_expression(obl))
            case Def():
                raise ValueError("sequent built from unexpanded obligation")
    return Sequent(tuple(constants), tuple(hyps), o.goal)


# ---------------------------------------------------------------------------
# Normalization

_SET_SHAPES = (s.SetComp, s.SetImage, s.PowerSet, s.FuncSpace)


def normalize(e: Expr) -> Expr:
    """Rewrite bounded quantifiers and negative relation forms into the core
    fragment the tableau rules operate on."""
    match e:
        case s.Ne(l, r):
            return Neg(s.Eq(normalize(l), normalize(r)))
        case s.NotIn(i, st):
            return Neg(s.In(normalize(i), normalize(st)))
        case Quant(kind, binders, body):
            out = normalize(body)
            for b in reversed(binders):
                dom = normalize(b.domain) if b.domain is not None else None
                if dom is None:
                    out = Quant(kind, (Binder(b.name),), out)
                elif kind == "forall":
                    out = Quant(kind, (Binder(b.name),), s.Implies(s.In(Ident(b.name), dom), out))
                else:
                    out = Quant(kind, (Binder(b.name),), s.And(s.In(Ident(b.name), dom), out))
            return out
        case _:
            from .meta import _map_children

            return _map_children(e, normalize)


def _is_meta(e: Expr) -> bool:
    return isinstance(e, Ident) and e.name.startswith("?")


def _reserved_names(e: Expr) -> set[str]:
    out: set[str] = set()
    for name in free_identifiers(e):
        if name.startswith("?") or name.startswith("!"):
            out.add(name)
    return out


# ---------------------------------------------------------------------------
# Substitution over metavariables


class _Subst:
    def __init__(self) -> None:
        self.map: dict[str, Expr] = {}
        self.trail: list[str] = []

    def mark(self) -> int:
        return len(self.trail)

    def undo(self, mark: int) -> None:
        while len(self.trail) > mark:
            del self.map[self.trail.pop()]

    def bind(self, name: str, value: Expr) -> None:
        self.map[name] = value
        self.trail.append(name)

    def resolve(self, e: Expr) -> Expr:
        from .meta import _map_children

        if isinstance(e, Ident) and e.name in self.map:
            return self.resolve(self.map[e.name])
        return _map_children(e, self.resolve)

    def occurs(self, name: str, e: Expr) -> bool:
        e = self.resolve(e)
        return name in free_identifiers(e)

    def unify(self, a: Expr, b: Expr, cc: "_Congruence | None" = None) -> bool:
        """Extend the substitution to make a and b equal; trail-undoable.

        With a congruence, a mismatch between a ground subterm and another
        term is retried once through the ground term's congruence class."""
        a, b = self.resolve(a), self.resolve(b)
        if a == b:
            return True
        if _is_meta(a):
            if self.occurs(a.name, b):
                return False
            self.bind(a.name, b)
            return True
        if _is_meta(b):
            return self.unify(b, a, cc)
        if type(a) is type(b):
            mark = self.mark()
            if self._unify_same(a, b, cc):
                return True
            self.undo(mark)
        return self._unify_via_congruence(a, b, cc)

    def _unify_same(self, a: Expr, b: Expr, cc) -> bool:
        match a:
            case Ident(n):
                return n == b.name  # type: ignore[attr-defined]
            case s.Bool(v):
                return v == b.value  # type: ignore[attr-defined]
            case OpApp(n, args):
                if n != b.name or len(args) != len(b.args):  # type: ignore[attr-defined]
                    return False
                return all(self.unify(x, y, cc) for x, y in zip(args, b.args))  # type: ignore[attr-defined]
            case Quant(kind, binders, body):
                if kind != b.kind or len(binders) != len(b.binders):  # type: ignore[attr-defined]
                    return False
                for ba, bb in zip(binders, b.binders):  # type: ignore[attr-defined]
                    if ba.name != bb.name or (ba.domain is None) != (bb.domain is None):
                        return False
                    if ba.domain is not None and not self.unify(ba.domain, bb.domain, cc):
                        return False
                return self.unify(body, b.body, cc)  # type: ignore[attr-defined]
            case s.SetComp(var, domain, pred):
                return (
                    var == b.var  # type: ignore[attr-defined]
                    and self.unify(domain, b.domain, cc)  # type: ignore[attr-defined]
                    and self.unify(pred, b.pred, cc)  # type: ignore[attr-defined]
                )
            case s.SetImage(expr, var, domain):
                return (
                    var == b.var  # type: ignore[attr-defined]
                    and self.unify(expr, b.expr, cc)  # type: ignore[attr-defined]
                    and self.unify(domain, b.domain, cc)  # type: ignore[attr-defined]
                )
            case _:
                ka = list(s.children(a))
                kb = list(s.children(b))
                if len(ka) != len(kb):
                    return False
                return all(self.unify(x, y, cc) for x, y in zip(ka, kb))

    def _ground_expr(self, e: Expr) -> bool:
        return not any(
            n.startswith("?") for n in free_identifiers(self.resolve(e))
        )

    def _unify_via_congruence(self, a: Expr, b: Expr, cc) -> bool:
        if cc is None:
            return False
        ga, gb = self._ground_expr(a), self._ground_expr(b)
        if ga and gb:
            return cc.equal(a, b)
        # one hop: retry the non-ground side against the ground side's class
        for g, other, g_ground in ((a, b, ga), (b, a, gb)):
            if not g_ground:
                continue
            for t in list(cc.pool):
                if t == g or not cc.equal(g, t):
                    continue
                mark = self.mark()
                if self.unify(t, other):
                    return True
                self.undo(mark)
        return False


# ---------------------------------------------------------------------------
# Ground congruence closure


def _pool_terms(e: Expr, pool: list[Expr]) -> None:
    if e not in pool:
        pool.append(e)
    match e:
        case Quant() | s.SetComp() | s.SetImage():
            return  # binder nodes are opaque leaves for congruence
        case _:
            for c in s.children(e):
                _pool_terms(c, pool)


class _Congruence:
    def __init__(self, equalities: list[tuple[Expr, Expr]]):
        self.pool: list[Expr] = []
        for a, b in equalities:
            _pool_terms(a, self.pool)
            _pool_terms(b, self.pool)
        self.parent: dict[Expr, Expr] = {}
        for a, b in equalities:
            self._union(a, b)
        self._congruence_fixpoint()

    def _find(self, t: Expr) -> Expr:
        p = self.parent.get(t, t)
        if p == t:
            return t
        root = self._find(p)
        self.parent[t] = root
        return root

    def _union(self, a: Expr, b: Expr) -> None:
        ra, rb = self._find(a), self._find(b)
        if ra != rb:
            self.parent[ra] = rb

    def _congruence_fixpoint(self) -> None:
        changed = True
        while changed:
            changed = False
            n = len(self.pool)
            for i in range(n):
                for j in range(i + 1, n):
                    a, b = self.pool[i], self.pool[j]
                    if self._find(a) == self._find(b):
                        continue
                    if self._congruent(a, b):
                        self._union(a, b)
                        changed = True

    def _congruent(self, a: Expr, b: Expr) -> bool:
        if type(a) is not type(b):
            return False
        match a:
            case OpApp(n, args):
                return (
                    n == b.name  # type: ignore[attr-defined]
                    and len(args) == len(b.args)  # type: ignore[attr-defined]
                    and all(self.equal(x, y) for x, y in zip(args, b.args))  # type: ignore[attr-defined]
                )
            case s.FnApp(fn, arg):
                return self.equal(fn, b.fn) and self.equal(arg, b.arg)  # type: ignore[attr-defined]
            case s.PowerSet(st):
                return self.equal(st, b.set)  # type: ignore[attr-defined]
            case s.FuncSpace(dom, cod):
                return self.equal(dom, b.dom) and self.equal(cod, b.cod)  # type: ignore[attr-defined]
            case _:
                return False

    def equal(self, a: Expr, b: Expr) -> bool:
        if a == b:
            return True
        if a not in self.parent and a not in self.pool:
            _pool_terms(a, self.pool)
        if b not in self.parent and b not in self.pool:
            _pool_terms(b, self.pool)
        if self._find(a) == self._find(b):
            return True
        return self._congruent(a, b)

    def equal_atom(self, a: Expr, b: Expr) -> bool:
        """Atom congruence: same predicate shape with congruent arguments."""
        if type(a) is not type(b):
            return False
        match a:
            case s.In(i, st):
                return self.equal(i, b.item) and self.equal(st, b.set)  # type: ignore[attr-defined]
            case s.Eq(l, r):
                return self.equal(l, b.left) and self.equal(r, b.right)  # type: ignore[attr-defined]
            case _:
                return self.equal(a, b)


# ---------------------------------------------------------------------------
# Rule computation (shared by search and replay)

_ATOMS = (s.In, s.Eq, OpApp, Ident, s.FnApp, s.Bool, s.Subseteq)


def _fresh_bound(base: str, *exprs: Expr) -> str:
    avoid: set[str] = set()
    for e in exprs:
        avoid |= free_identifiers(e)
    return s.fresh_name(base, avoid)


def _expansion(e: Expr) -> Optional[tuple[str, str, object]]:
    """Classify a formula: (rule, kind, payload) where kind is one of
    alpha / beta / gamma / delta, or None for literals."""
    match e:
        case s.And(a, b):
            return ("alpha", "alpha", [a, b])
        case Neg(s.Or(a, b)):
            return ("alpha", "alpha", [Neg(a), Neg(b)])
        case Neg(s.Implies(a, b)):
            return ("alpha", "alpha", [a, Neg(b)])
        case Neg(Neg(a)):
            return ("alpha", "alpha", [a])
        case s.Iff(a, b):
            return ("alpha", "alpha", [s.Implies(a, b), s.Implies(b, a)])
        case s.Or(a, b):
            return ("beta", "beta", [a, b])
        case Neg(s.And(a, b)):
            return ("beta", "beta", [Neg(a), Neg(b)])
        case s.Implies(a, b):
            return ("beta", "beta", [Neg(a), b])
        case Neg(s.Iff(a, b)):
            return ("beta", "beta", [s.And(a, Neg(b)), s.And(Neg(a), b)])
        case Quant("forall", (Binder(x, None),), body):
            return ("gamma", "gamma", (x, body, False))
        case Neg(Quant("exists", (Binder(x, None),), body)):
            return ("gamma", "gamma", (x, body, True))
        case Quant("exists", (Binder(x, None),), body):
            return ("delta", "delta", (x, body, False))
        case Neg(Quant("forall", (Binder(x, None),), body)):
            return ("delta", "delta", (x, body, True))
        case s.In(a, s.SetComp(v, dom, pred)):
            return ("subset-of", "alpha", [s.In(a, dom), s.substitute(pred, v, a)])
        case Neg(s.In(a, s.SetComp(v, dom, pred))):
            return (
                "subset-of-neg",
                "beta",
                [Neg(s.In(a, dom)), Neg(s.substitute(pred, v, a))],
            )
        case s.In(a, s.SetImage(expr, v, dom)):
            y = _fresh_bound(v, a, expr, dom)
            inst = s.substitute(expr, v, Ident(y))
            return (
                "set-of-all",
                "alpha",
                [Quant("exists", (Binder(y),), s.And(s.In(Ident(y), dom), s.Eq(a, inst)))],
            )
        case Neg(s.In(a, s.SetImage(expr, v, dom))):
            y = _fresh_bound(v, a, expr, dom)
            inst = s.substitute(expr, v, Ident(y))
            return (
                "set-of-all-neg",
                "alpha",
                [
                    Quant(
                        "forall",
                        (Binder(y),),
                        Neg(s.And(s.In(Ident(y), dom), s.Eq(a, inst))),
                    )
                ],
            )
        case s.In(a, s.PowerSet(st)):
            return ("power-set", "alpha", [s.Subseteq(a, st)])
        case Neg(s.In(a, s.PowerSet(st))):
            return ("power-set-neg", "alpha", [Neg(s.Subseteq(a, st))])
        case s.Subseteq(a, b):
            z = _fresh_bound("z", a, b)
            return (
                "subseteq",
                "alpha",
                [
                    Quant(
                        "forall",
                        (Binder(z),),
                        s.Implies(s.In(Ident(z), a), s.In(Ident(z), b)),
                    )
                ],
            )
        case Neg(s.Subseteq(a, b)):
            z = _fresh_bound("z", a, b)
            return (
                "subseteq-neg",
                "alpha",
                [
                    Neg(
                        Quant(
                            "forall",
                            (Binder(z),),
                            s.Implies(s.In(Ident(z), a), s.In(Ident(z), b)),
                        )
                    )
                ],
            )
        case s.In(f, s.FuncSpace(dom, cod)):
            z = _fresh_bound("z", f, dom, cod)
            return (
                "func-space",
                "alpha",
                [
                    Quant(
                        "forall",
                        (Binder(z),),
                        s.Implies(s.In(Ident(z), dom), s.In(s.FnApp(f, Ident(z)), cod)),
                    )
                ],
            )
        case Neg(s.Eq(a, b)) if isinstance(a, _SET_SHAPES) or isinstance(b, _SET_SHAPES):
            z = _fresh_bound("z", a, b)
            return (
                "extensionality",
                "alpha",
                [
                    Neg(
                        Quant(
                            "forall",
                            (Binder(z),),
                            s.Iff(s.In(Ident(z), a), s.In(Ident(z), b)),
                        )
                    )
                ],
            )
        case _:
            return None


# ---------------------------------------------------------------------------
# Search


class _Timeout(Exception):
    pass


class _Branch:
    __slots__ = ("items", "expanded", "gamma_uses", "depth", "checked", "version")

    def __init__(self, items, expanded, gamma_uses, depth, checked=0, version=0):
        self.items: list[int] = items
        self.expanded: set[tuple[int, str]] = expanded  # (formula, rule) one-shots
        self.gamma_uses: dict[int, int] = gamma_uses
        self.depth: int = depth
        self.checked: int = checked  # prefix of items already pairwise-checked
        self.version: int = version  # substitution trail length at creation

    def extend(self, new_ids, consumed, depth_cost, version, gamma_of=None):
        items = list(self.items)
        items.extend(new_ids)
        gamma_uses = dict(self.gamma_uses)
        if gamma_of is not None:
            gamma_uses[gamma_of] = gamma_uses.get(gamma_of, 0) + 1
        expanded = set(self.expanded)
        if consumed is not None:
            expanded.add(consumed)
        return _Branch(
            items, expanded, gamma_uses, self.depth - depth_cost,
            checked=len(self.items), version=version,
        )


_THEORY_RULES = ("func-space", "extensionality")


def _replace_term(e: Expr, old: Expr, new: Expr) -> Expr:
    """Replace occurrences of a ground term, not descending under binders
    (a binder may rebind a name occurring in the term)."""
    if e == old:
        return new
    match e:
        case Quant() | s.SetComp() | s.SetImage() | Ident() | s.Bool():
            return e
        case _:
            from .meta import _map_children

            return _map_children(e, lambda c: _replace_term(c, old, new))


class _Search:
    def __init__(self, initial: list[Expr], budget: Budget, deadline: float):
        self.initial = initial
        self.budget = budget
        self.deadline = deadline
        self.entries: list[Expr] = []
        self.meta_free: list[bool] = []
        self.exp_cache: dict[int, Optional[tuple]] = {}
        self.subst = _Subst()
        self.trace: list[str] = []
        self.counter = 0
        self.cut = False
        self.expansions = 0
        self.closures = 0

    def run(self, depth: int) -> bool:
        self.entries = []
        self.meta_free = []
        self.exp_cache = {}
        self.subst = _Subst()
        self.trace = []
        self.counter = 0
        self.cut = False
        for e in self.initial:
            self._add(e)
        branch = _Branch(list(range(len(self.entries))), set(), {}, depth)
        return self._prove(branch, [])

    def _check_time(self) -> None:
        if time.monotonic() > self.deadline:
            raise _Timeout()

    def _emit(self, line: str) -> int:
        self.trace.append(line)
        return len(self.trace)

    def _untrace(self, mark: int) -> None:
        del self.trace[mark - 1 :]

    def _add(self, e: Expr) -> int:
        self.entries.append(e)
        self.meta_free.append(
            not any(n.startswith("?") for n in free_identifiers(e))
        )
        return len(self.entries) - 1

    def _pop(self, k: int) -> None:
        for i in range(len(self.entries) - k, len(self.entries)):
            self.exp_cache.pop(i, None)
        del self.entries[len(self.entries) - k :]
        del self.meta_free[len(self.meta_free) - k :]

    def _resolved(self, i: int) -> Expr:
        if self.meta_free[i]:
            return self.entries[i]
        return self.subst.resolve(self.entries[i])

    def _expansion_of(self, i: int):
        if self.meta_free[i]:
            if i not in self.exp_cache:
                self.exp_cache[i] = _expansion(self.entries[i])
            return self.exp_cache[i]
        return _expansion(self.subst.resolve(self.entries[i]))

    def _text(self, e: Expr) -> str:
        return pretty(self.subst.resolve(e))

    def _prove(self, cur: _Branch, rest: list[_Branch]) -> bool:
        self._check_time()
        closed = self._try_closures(cur, rest)
        if closed is not None:
            return closed
        if cur.depth <= 0:
            self.cut = True
            return False
        return self._try_expansions(cur, rest)

    def _continue(self, rest: list[_Branch]) -> bool:
        if not rest:
            return True
        return self._prove(rest[0], rest[1:])

    def _try_closures(self, cur: _Branch, rest: list[_Branch]) -> Optional[bool]:
        """None: no closure worked.  True/False: a closure without new
        bindings was found and committed to; result is the continuation's."""
        items = cur.items
        full = len(self.subst.trail) != cur.version
        news = items if full else items[cur.checked :]
        if not full and any(
            isinstance(self._resolved(i), s.Eq) and self._ground_id(i) for i in news
        ):
            # a new ground equality can make old pairs congruent
            full = True
            news = items
        # single-formula closures (commit: no bindings involved)
        for i in news:
            e = self._resolved(i)
            if e == s.FALSE or e == Neg(s.TRUE):
                self._emit(f"close-false\t{i}")
                self.closures += 1
                return self._continue(rest)
            if isinstance(e, Neg) and isinstance(e.item, s.Eq) and e.item.left == e.item.right:
                self._emit(f"close-eq\t{i}\t")
                self.closures += 1
                return self._continue(rest)
        new_set = set(news)
        pairs: list[tuple[int, int]] = []
        for ai, i in enumerate(items):
            for j in items[ai + 1 :]:
                if i in new_set or j in new_set:
                    pairs.append((i, j))
        # no-binding complementary pairs: commit
        for i, j in pairs:
            ei, ej = self._resolved(i), self._resolved(j)
            for a, b in ((ei, ej), (ej, ei)):
                if isinstance(a, Neg) and a.item == b:
                    self._emit(f"close\t{i}\t{j}\t")
                    self.closures += 1
                    return self._continue(rest)
        # congruence closures (no bindings: commit)
        cc = self._congruence(cur)
        if cc is not None:
            for i in news:
                e = self._resolved(i)
                if (
                    isinstance(e, Neg)
                    and isinstance(e.item, s.Eq)
                    and self._ground_id(i)
                    and cc.equal(e.item.left, e.item.right)
                ):
                    self._emit(f"close-eq\t{i}\t")
                    self.closures += 1
                    return self._continue(rest)
            for i, j in pairs:
                ei, ej = self._resolved(i), self._resolved(j)
                for a, b, x, y in ((ei, ej, i, j), (ej, ei, j, i)):
                    if (
                        isinstance(a, Neg)
                        and isinstance(a.item, _ATOMS)
                        and isinstance(b, _ATOMS)
                        and self._ground_id(x)
                        and self._ground_id(y)
                        and cc.equal_atom(a.item, b)
                    ):
                        self._emit(f"close\t{x}\t{y}\t")
                        self.closures += 1
                        return self._continue(rest)
        # binding closures: backtrackable choice points (congruence-assisted)
        for i in news:
            e = self._resolved(i)
            if isinstance(e, Neg) and isinstance(e.item, s.Eq):
                mark_s = self.subst.mark()
                if self.subst.unify(e.item.left, e.item.right, cc):
                    binds = self._bindings_since(mark_s)
                    mark_t = self._emit(f"close-eq\t{i}\t{binds}")
                    self.closures += 1
                    if self._continue(rest):
                        return True
                    self._untrace(mark_t)
                self.subst.undo(mark_s)
        for i, j in pairs:
            ei, ej = self._resolved(i), self._resolved(j)
            for a, b in ((ei, ej), (ej, ei)):
                if isinstance(a, Neg) and not a.item == b:
                    mark_s = self.subst.mark()
                    if self.subst.unify(a.item, b, cc):
                        binds = self._bindings_since(mark_s)
                        mark_t = self._emit(f"close\t{i}\t{j}\t{binds}")
                        self.closures += 1
                        if self._continue(rest):
                            return True
                        self._untrace(mark_t)
                    self.subst.undo(mark_s)
        return None

    def _bindings_since(self, mark: int) -> str:
        new = self.subst.trail[mark:]
        return "; ".join(
            f"{k} := {pretty(self.subst.resolve(self.subst.map[k]))}" for k in sorted(new)
        )

    def _ground_id(self, i: int) -> bool:
        if self.meta_free[i]:
            return True
        return not any(
            n.startswith("?") for n in free_identifiers(self.subst.resolve(self.entries[i]))
        )

    def _ground(self, e: Expr) -> bool:
        return not any(
            n.startswith("?") for n in free_identifiers(self.subst.resolve(e))
        )

    def _congruence(self, cur: _Branch) -> Optional[_Congruence]:
        eqs: list[tuple[Expr, Expr]] = []
        for i in cur.items:
            e = self._resolved(i)
            if isinstance(e, s.Eq) and self._ground_id(i):
                eqs.append((e.left, e.right))
        if not eqs:
            return None
        return _Congruence(eqs)

    def _try_expansions(self, cur: _Branch, rest: list[_Branch]) -> bool:
        # invertible non-branching rules first, then delta, rewrite, beta;
        # gamma instantiations and the heuristic theory rules are tried as
        # backtrackable alternatives at the end
        for want in ("alpha", "delta"):
            for i in cur.items:
                exp = self._expansion_of(i)
                if exp is None or exp[1] != want or exp[0] in _THEORY_RULES:
                    continue
                if (i, exp[0]) in cur.expanded:
                    continue
                return self._apply(cur, rest, i, exp)
        rewrite = self._find_rewrite(cur)
        if rewrite is not None:
            i, formula = rewrite
            return self._apply_parts(cur, rest, i, "rewrite", [formula])
        for i in cur.items:
            exp = self._expansion_of(i)
            if exp is None or exp[1] != "beta":
                continue
            if (i, exp[0]) in cur.expanded:
                continue
            return self._apply(cur, rest, i, exp)
        alternatives: list[tuple[int, int, tuple]] = []
        for i in cur.items:
            exp = self._expansion_of(i)
            if exp is None:
                continue
            if exp[1] == "gamma":
                uses = cur.gamma_uses.get(i, 0)
                if uses < self.budget.gamma_reuse:
                    alternatives.append((uses, i, exp))
            elif exp[0] in _THEORY_RULES and (i, exp[0]) not in cur.expanded:
                alternatives.append((self.budget.gamma_reuse, i, exp))
        alternatives.sort(key=lambda g: (g[0], g[1]))
        for _, i, exp in alternatives:
            if self._apply(cur, rest, i, exp):
                return True
        return False

    def _apply(self, cur, rest, i, exp) -> bool:
        rule, kind, payload = exp
        if kind in ("alpha", "beta"):
            return self._apply_parts(cur, rest, i, rule, payload, branch=kind == "beta")
        x, body, negate = payload
        if kind == "gamma":
            self.counter += 1
            mv = Ident(f"?{self.counter}")
            inst = s.substitute(body, x, mv)
            if negate:
                inst = Neg(inst)
            nid = self._add(inst)
            mark_t = self._emit(f"gamma\t{i}\t{mv.name}\t{nid}:{self._text(inst)}")
            self.expansions += 1
            nxt = cur.extend([nid], None, 1, len(self.subst.trail), gamma_of=i)
            if self._prove(nxt, rest):
                return True
            self._untrace(mark_t)
            self._pop(1)
            self.counter -= 1
            return False
        # delta
        self.counter += 1
        sk_name = f"!sk{self.counter}"
        resolved_body = self.subst.resolve(body)
        mvs = sorted(n for n in free_identifiers(resolved_body) if n.startswith("?"))
        sk: Expr = OpApp(sk_name, tuple(Ident(m) for m in mvs)) if mvs else Ident(sk_name)
        inst = s.substitute(body, x, sk)
        if negate:
            inst = Neg(inst)
        nid = self._add(inst)
        mark_t = self._emit(f"delta\t{i}\t{sk_name}\t{nid}:{self._text(inst)}")
        self.expansions += 1
        nxt = cur.extend([nid], (i, rule), 1, len(self.subst.trail))
        if self._prove(nxt, rest):
            return True
        self._untrace(mark_t)
        self._pop(1)
        self.counter -= 1
        return False

    def _apply_parts(self, cur, rest, i, rule, parts, branch=False) -> bool:
        ids = [self._add(p) for p in parts]
        intro = "\t".join(f"{n}:{self._text(p)}" for n, p in zip(ids, parts))
        mark_t = self._emit(f"{rule}\t{i}\t{intro}")
        self.expansions += 1
        version = len(self.subst.trail)
        if not branch or len(ids) == 1:
            nxt = cur.extend(ids, (i, rule), 1, version)
            if self._prove(nxt, rest):
                return True
        else:
            # second part explored first: it usually constrains the
            # metavariables the first part's side condition needs
            first = cur.extend([ids[1]], (i, rule), 1, version)
            deferred = cur.extend([ids[0]], (i, rule), 1, version)
            if self._prove(first, [deferred] + rest):
                return True
        self._untrace(mark_t)
        self._pop(len(ids))
        return False

    def _find_rewrite(self, cur: _Branch) -> Optional[tuple[int, Expr]]:
        """One bounded rewrite: re-expose a set shape hidden behind branch
        equalities in a membership literal, once per principal per branch."""
        cc = self._congruence(cur)
        if cc is None:
            return None
        shaped = [t for t in list(cc.pool) if isinstance(t, _SET_SHAPES)]
        if not shaped:
            return None
        present = {self._resolved(i) for i in cur.items}
        for i in cur.items:
            if (i, "rewrite") in cur.expanded:
                continue
            e = self._resolved(i)
            inner = e.item if isinstance(e, Neg) else e
            if not isinstance(inner, s.In) or isinstance(inner.set, _SET_SHAPES):
                continue
            if not self._ground_id(i):
                continue
            for t in shaped:
                if cc.equal(inner.set, t):
                    new_atom = s.In(inner.item, t)
                    out: Expr = Neg(new_atom) if isinstance(e, Neg) else new_atom
                    if out in present:
                        continue
                    return i, out
        return None


def prove(sequent: Sequent, budget: Budget = Budget()) -> ProverOutcome:
    """Attempt to close a tableau for the sequent within the budget."""
    bad: set[str] = set()
    for e in (*sequent.hypotheses, sequent.goal):
        bad |= _reserved_names(e)
    for name in sequent.constants:
        if name.startswith("?") or name.startswith("!"):
            bad.add(name)
    if bad:
        return Malformed(f"reserved names in sequent: {sorted(bad)}")
    initial = [normalize(h) for h in sequent.hypotheses]
    initial.append(Neg(normalize(sequent.goal)))
    deadline = time.monotonic() + budget.timeout_ms / 1000.0
    search = _Search(initial, budget, deadline)
    iterations = 0
    try:
        for depth in range(1, budget.max_depth + 1):
            iterations += 1
            if search.run(depth):
                return Proved("\n".join(search.trace) + "\n")
            if not search.cut:
                break  # saturated: deeper iterations cannot differ
    except _Timeout:
        return Unknown(
            "timeout",
            Stats(iterations, search.expansions, search.closures),
        )
    return Unknown(
        "exhausted",
        Stats(iterations, search.expansions, search.closures),
    )


# ---------------------------------------------------------------------------
# Trace replay


@dataclass(frozen=True)
class ReplayResult:
    ok: bool
    error: Optional[str] = None


def replay_trace(sequent: Sequent, trace: str) -> ReplayResult:
    """Re-apply every rule in the trace and confirm all branches close."""
    entries: list[Expr] = [normalize(h) for h in sequent.hypotheses]
    entries.append(Neg(normalize(sequent.goal)))
    subst = _Subst()

    def text(e: Expr) -> str:
        return pretty(subst.resolve(e))

    stack: list[list[int]] = [list(range(len(entries)))]

    def fail(line_no: int, msg: str) -> ReplayResult:
        return ReplayResult(False, f"line {line_no}: {msg}")

    lines = [ln for ln in trace.splitlines() if ln.strip()]
    for no, line in enumerate(lines, start=1):
        if not stack:
            return fail(no, "all branches already closed")
        branch = stack[-1]
        fields = line.split("\t")
        rule = fields[0]
        try:
            principal = int(fields[1])
        except (IndexError, ValueError):
            return fail(no, "malformed principal index")
        if principal not in branch and rule not in ():
            return fail(no, f"principal {principal} not on the open branch")
        e = subst.resolve(entries[principal])

        if rule == "close-false":
            if e not in (s.FALSE, Neg(s.TRUE)):
                return fail(no, "close-false on a non-falsum formula")
            stack.pop()
            continue
        if rule == "close-eq":
            if not (isinstance(e, Neg) and isinstance(e.item, s.Eq)):
                return fail(no, "close-eq on a non-equality")
            cc = _replay_congruence(entries, branch, subst)
            mark = subst.mark()
            if subst.unify(e.item.left, e.item.right, cc):
                binds = _replay_bindings(subst, mark)
                if binds != (fields[2] if len(fields) > 2 else ""):
                    return fail(no, "unifier bindings do not match")
                stack.pop()
                continue
            subst.undo(mark)
            return fail(no, "equality closure does not hold")
        if rule == "close":
            try:
                other = int(fields[2])
            except (IndexError, ValueError):
                return fail(no, "malformed closure pair")
            if other not in branch:
                return fail(no, f"formula {other} not on the open branch")
            f2 = subst.resolve(entries[other])
            cc = _replay_congruence(entries, branch, subst)
            closed = False
            for a, b in ((e, f2), (f2, e)):
                if isinstance(a, Neg):
                    mark = subst.mark()
                    if subst.unify(a.item, b, cc):
                        binds = _replay_bindings(subst, mark)
                        if binds != (fields[3] if len(fields) > 3 else ""):
                            subst.undo(mark)
                            return fail(no, "unifier bindings do not match")
                        closed = True
                        break
                    subst.undo(mark)
            if not closed:
                return fail(no, "formulas are not complementary")
            stack.pop()
            continue

        # expansion rules
        if rule == "gamma":
            exp = _expansion(e)
            if exp is None or exp[1] != "gamma":
                return fail(no, "gamma on a non-universal formula")
            x, body, negate = exp[2]
            mv = fields[2]
            if not mv.startswith("?"):
                return fail(no, "malformed metavariable name")
            inst = s.substitute(body, x, Ident(mv))
            if negate:
                inst = Neg(inst)
            if not _replay_intro(entries, fields[3:4], [inst], text):
                return fail(no, "introduced formula does not match the rule")
            branch.append(len(entries) - 1)
            continue
        if rule == "delta":
            exp = _expansion(e)
            if exp is None or exp[1] != "delta":
                return fail(no, "delta on a non-existential formula")
            x, body, negate = exp[2]
            sk_name = fields[2]
            if not sk_name.startswith("!"):
                return fail(no, "malformed skolem name")
            resolved_body = subst.resolve(body)
            mvs = sorted(n for n in free_identifiers(resolved_body) if n.startswith("?"))
            sk: Expr = (
                OpApp(sk_name, tuple(Ident(m) for m in mvs)) if mvs else Ident(sk_name)
            )
            inst = s.substitute(body, x, sk)
            if negate:
                inst = Neg(inst)
            if not _replay_intro(entries, fields[3:4], [inst], text):
                return fail(no, "introduced formula does not match the rule")
            branch.append(len(entries) - 1)
            continue
        if rule == "rewrite":
            inner = e.item if isinstance(e, Neg) else e
            if not isinstance(inner, (s.In, OpApp, s.Subseteq)):
                return fail(no, "rewrite on an unsupported literal")
            intro = fields[2]
            nid_s, _, ftext = intro.partition(":")
            cc = _replay_congruence(entries, branch, subst)
            if cc is None:
                return fail(no, "rewrite without branch equalities")
            target = _replay_find_rewrite(entries, branch, subst, e)
            if target is None or text(target) != ftext:
                return fail(no, "rewrite target not justified by branch equalities")
            new_inner = target.item if isinstance(target, Neg) else target
            if not cc.equal_atom(inner, new_inner):
                return fail(no, "rewrite not congruent under branch equalities")
            if int(nid_s) != len(entries):
                return fail(no, "unexpected introduced index")
            entries.append(target)
            branch.append(len(entries) - 1)
            continue

        exp = _expansion(e)
        if exp is None or exp[0] != rule:
            return fail(no, f"rule {rule} does not apply to the principal formula")
        parts = exp[2]
        if exp[1] == "beta":
            # the search continues with the second part and defers the first
            if len(fields) != 4:
                return fail(no, "beta must introduce exactly two formulas")
            if not _replay_intro(entries, fields[2:3], [parts[0]], text):
                return fail(no, "first branch formula does not match")
            first_id = len(entries) - 1
            if not _replay_intro(entries, fields[3:4], [parts[1]], text):
                return fail(no, "second branch formula does not match")
            second_id = len(entries) - 1
            deferred = list(branch)
            deferred.append(first_id)
            branch.append(second_id)
            stack.insert(len(stack) - 1, deferred)
            continue
        if not _replay_intro(entries, fields[2:], parts, text):
            return fail(no, "introduced formulas do not match the rule")
        branch.extend(range(len(entries) - len(parts), len(entries)))

    if stack:
        return ReplayResult(False, f"{len(stack)} branch(es) left open")
    return ReplayResult(True)


def _replay_bindings(subst: _Subst, mark: int) -> str:
    new = subst.trail[mark:]
    return "; ".join(
        f"{k} := {pretty(subst.resolve(subst.map[k]))}" for k in sorted(new)
    )


def _replay_find_rewrite(entries, branch, subst, e: Expr) -> Optional[Expr]:
    eqs: list[tuple[Expr, Expr]] = []
    ground = lambda x: not any(  # noqa: E731
        n.startswith("?") for n in free_identifiers(subst.resolve(x))
    )
    for i in branch:
        f = subst.resolve(entries[i])
        if isinstance(f, s.Eq) and ground(f) and f.left != f.right:
            eqs.append((f.left, f.right))
            eqs.append((f.right, f.left))
    inner = e.item if isinstance(e, Neg) else e
    present = {subst.resolve(entries[i]) for i in branch}
    for l, r in eqs:
        new_inner = _replace_term(inner, l, r)
        if new_inner == inner:
            continue
        out: Expr = Neg(new_inner) if isinstance(e, Neg) else new_inner
        if out in present:
            continue
        return out
    return None


def _replay_congruence(entries, branch, subst) -> Optional[_Congruence]:
    eqs = []
    for i in branch:
        e = subst.resolve(entries[i])
        if isinstance(e, s.Eq) and not any(
            n.startswith("?") for n in free_identifiers(e)
        ):
            eqs.append((e.left, e.right))
    return _Congruence(eqs) if eqs else None


def _replay_intro(entries, fields, parts, text) -> bool:
    if len(fields) != len(parts):
        return False
    for f, p in zip(fields, parts):
        nid_s, _, ftext = f.partition(":")
        try:
            nid = int(nid_s)
        except ValueError:
            return False
        if nid != len(entries) or text(p) != ftext:
            return False
        entries.append(p)
    return True


def check_trace(sequent: Sequent, trace: str) -> bool:
    """True iff replaying the trace applies only legal rules and closes every
    branch; see replay_trace for the first-failure diagnostic."""
    return replay_trace(sequent, trace).ok
