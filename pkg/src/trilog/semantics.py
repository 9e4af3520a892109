"""Three-valued evaluation of normalized logic programs.

Truth values follow weak Kleene logic: ``WRONG`` absorbs every connective.
Semantic values live in pairwise-disjoint domains; comparing or applying
values across domains yields ``WRONG``.  Function and predicate symbols are
interpreted by finite tables so that every quantification over states can be
checked by enumeration.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import (
    Dict,
    FrozenSet,
    Iterable,
    Iterator,
    List,
    Mapping,
    Optional,
    Sequence,
    Set,
    Tuple,
    Union,
)

from trilog.ast import (
    LIST_CONS,
    NIL,
    Call,
    Clause,
    Const,
    Goal,
    GoalSeq,
    Program,
    Term,
    Unify,
    Var,
    goal_vars,
    quote_atom,
    seq_vars,
    term_vars,
)
from trilog.errors import ArityMismatch, MissingSymbol, UniverseTooLarge

DEFAULT_MAX_STATES = 10**6


def max_states_default() -> int:
    raw = os.environ.get("TRILOG_MAX_STATES")
    if raw:
        return int(raw)
    return DEFAULT_MAX_STATES


# --- truth values ---------------------------------------------------------


class TruthValue(Enum):
    TRUE = "true"
    FALSE = "false"
    WRONG = "wrong"

    def __str__(self) -> str:
        return self.value


T, F, W = TruthValue.TRUE, TruthValue.FALSE, TruthValue.WRONG

AND_TABLE = {
    (T, T): T, (T, F): F, (T, W): W,
    (F, T): F, (F, F): F, (F, W): W,
    (W, T): W, (W, F): W, (W, W): W,
}

OR_TABLE = {
    (T, T): T, (T, F): T, (T, W): W,
    (F, T): T, (F, F): F, (F, W): W,
    (W, T): W, (W, F): W, (W, W): W,
}

NOT_TABLE = {T: F, F: T, W: W}


def tv_and(a: TruthValue, b: TruthValue) -> TruthValue:
    return AND_TABLE[a, b]


def tv_or(a: TruthValue, b: TruthValue) -> TruthValue:
    return OR_TABLE[a, b]


def tv_not(a: TruthValue) -> TruthValue:
    return NOT_TABLE[a]


def tv_implies(a: TruthValue, b: TruthValue) -> TruthValue:
    return tv_or(tv_not(a), b)


def fold_and(values: Iterable[TruthValue]) -> TruthValue:
    out = T
    for v in values:
        out = tv_and(out, v)
    return out


def fold_or(values: Iterable[TruthValue]) -> TruthValue:
    out = F
    for v in values:
        out = tv_or(out, v)
    return out


# --- semantic values --------------------------------------------------------

BOOL_DOMAIN = "Bool"
WRONG_DOMAIN = "W"


@dataclass(frozen=True)
class Base:
    domain: str
    token: str

    @property
    def depth(self) -> int:
        return 0


@dataclass(frozen=True)
class Tree:
    domain: str
    functor: str
    children: Tuple["Value", ...] = ()

    @cached_property
    def depth(self) -> int:
        if not self.children:
            return 0
        return 1 + max(getattr(c, "depth", 0) for c in self.children)


@dataclass(frozen=True)
class BoolV:
    value: bool


class WrongV:
    """The single member of the domain W."""

    _instance: Optional["WrongV"] = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "WRONG_VALUE"

    def __reduce__(self):
        return (WrongV, ())


WRONG_VALUE = WrongV()

Signature = Tuple[FrozenSet[str], ...]


@dataclass(eq=False)
class Func:
    """Interpretation of a function symbol as a finite table.

    ``signature[i]`` is the set of domain ids accepted in position ``i``.  A
    missing entry for arguments inside the signature is a truncation of a
    depth-bounded tree domain when ``complete`` is false.
    """

    name: str
    signature: Signature
    result: str
    table: Dict[Tuple["Value", ...], "Value"] = field(default_factory=dict)
    complete: bool = False
    _preimage: Optional[Dict["Value", List[Tuple["Value", ...]]]] = field(
        default=None, init=False, repr=False
    )

    @property
    def arity(self) -> int:
        return len(self.signature)

    def preimage(self, value: "Value") -> List[Tuple["Value", ...]]:
        if self._preimage is None:
            inverse: Dict[Value, List[Tuple[Value, ...]]] = {}
            for args, res in self.table.items():
                inverse.setdefault(res, []).append(args)
            self._preimage = inverse
        return self._preimage.get(value, [])


@dataclass(eq=False)
class PredFunc:
    """Interpretation of a predicate: Bool-valued on its signature domains.

    Only the true tuples are stored; every other in-signature tuple is false.
    """

    name: str
    signature: Signature
    true_set: FrozenSet[Tuple["Value", ...]] = frozenset()

    def accepts(self, args: Sequence["Value"]) -> bool:
        if len(args) != len(self.signature):
            return False
        return all(domain_of(a) in doms for a, doms in zip(args, self.signature))

    def apply(self, args: Sequence["Value"]) -> TruthValue:
        if not self.accepts(args):
            return W
        return T if tuple(args) in self.true_set else F


Value = Union[Base, Tree, BoolV, WrongV, Func, PredFunc]


def domain_of(v: Value) -> str:
    if isinstance(v, (Base, Tree)):
        return v.domain
    if isinstance(v, BoolV):
        return BOOL_DOMAIN
    if v is WRONG_VALUE:
        return WRONG_DOMAIN
    raise TypeError(f"functional value {v!r} has a tuple of domains, not a domain")


def _token_key(token: str):
    try:
        return (0, int(token), "")
    except ValueError:
        return (1, 0, token)


def value_key(v: Value):
    if isinstance(v, Base):
        return (0, v.domain, _token_key(v.token))
    if isinstance(v, Tree):
        return (1, v.domain, v.depth, v.functor, tuple(value_key(c) for c in v.children))
    if isinstance(v, BoolV):
        return (2, "", int(v.value))
    return (3, "", 0)


def show_value(v: Value) -> str:
    if isinstance(v, Base):
        return quote_atom(v.token)
    if isinstance(v, Tree):
        if v.functor == LIST_CONS and len(v.children) == 2:
            items = [show_value(v.children[0])]
            rest = v.children[1]
            while isinstance(rest, Tree) and rest.functor == LIST_CONS and len(rest.children) == 2:
                items.append(show_value(rest.children[0]))
                rest = rest.children[1]
            if isinstance(rest, Tree) and rest.functor == NIL and not rest.children:
                return "[" + ", ".join(items) + "]"
            return "[" + ", ".join(items) + "|" + show_value(rest) + "]"
        if not v.children:
            return quote_atom(v.functor)
        return f"{quote_atom(v.functor)}({', '.join(show_value(c) for c in v.children)})"
    if isinstance(v, BoolV):
        return "true" if v.value else "false"
    if v is WRONG_VALUE:
        return "wrong"
    return f"<{type(v).__name__} {getattr(v, 'name', '?')}>"


# --- domains, universes, interpretations ----------------------------------


@dataclass(frozen=True)
class Domain:
    id: str
    kind: str  # "basic" | "tree" | "bool" | "wrong"
    members: FrozenSet[Value]

    def sorted_members(self) -> List[Value]:
        return sorted(self.members, key=value_key)


BOOL = Domain(BOOL_DOMAIN, "bool", frozenset({BoolV(True), BoolV(False)}))
WRONG_SINGLETON = Domain(WRONG_DOMAIN, "wrong", frozenset({WRONG_VALUE}))


@dataclass
class Universe:
    """The finite term domains (basic and tree) of an interpretation.

    Bool and W are implicit; variables only ever range over term domains.
    """

    domains: Dict[str, Domain]
    depth: int = 3
    base_types: Dict[str, str] = field(default_factory=dict)
    partition: str = "typed"

    def __post_init__(self):
        seen: Dict[Value, str] = {}
        for d in self.domains.values():
            for m in d.members:
                if m in seen:
                    raise ValueError(f"value {show_value(m)} in both {seen[m]} and {d.id}")
                seen[m] = d.id
        self._values = sorted(seen, key=value_key)

    def values(self) -> List[Value]:
        return list(self._values)

    def term_domain_ids(self) -> FrozenSet[str]:
        return frozenset(self.domains)

    def members(self, domain_ids: Iterable[str]) -> List[Value]:
        out: List[Value] = []
        for d in sorted(set(domain_ids)):
            if d in self.domains:
                out.extend(self.domains[d].members)
        return sorted(out, key=value_key)

    def size(self) -> int:
        return len(self._values)


@dataclass
class Interpretation:
    constants: Dict[str, Value] = field(default_factory=dict)
    functors: Dict[Tuple[str, int], Func] = field(default_factory=dict)
    predicates: Dict[str, PredFunc] = field(default_factory=dict)

    def constant(self, symbol: str) -> Value:
        try:
            return self.constants[symbol]
        except KeyError:
            raise MissingSymbol(f"no interpretation for constant {symbol}") from None

    def functor(self, name: str, arity: int) -> Func:
        try:
            return self.functors[name, arity]
        except KeyError:
            raise MissingSymbol(f"no interpretation for function symbol {name}/{arity}") from None

    def predicate(self, name: str) -> PredFunc:
        try:
            return self.predicates[name]
        except KeyError:
            raise MissingSymbol(f"no interpretation for predicate {name}") from None


State = Dict[str, Value]


@dataclass
class EvalLog:
    """Collects depth-truncation incidents met while evaluating."""

    truncations: List[Tuple[str, Tuple[Value, ...]]] = field(default_factory=list)

    def clear(self) -> None:
        self.truncations.clear()


# --- evaluation -------------------------------------------------------------


def eval_term(t: Term, interp: Interpretation, state: Mapping[str, Value],
              log: Optional[EvalLog] = None) -> Value:
    if isinstance(t, Var):
        return state[t.name]
    if isinstance(t, Const):
        return interp.constant(t.symbol)
    func = interp.functor(t.functor, len(t.args))
    args = tuple(eval_term(a, interp, state, log) for a in t.args)
    if any(a is WRONG_VALUE for a in args):
        return WRONG_VALUE
    if not all(domain_of(a) in doms for a, doms in zip(args, func.signature)):
        return WRONG_VALUE
    result = func.table.get(args)
    if result is None:
        if not func.complete and log is not None:
            log.truncations.append((func.name, args))
        return WRONG_VALUE
    return result


def eval_unify(t1: Term, t2: Term, interp: Interpretation, state: Mapping[str, Value],
               log: Optional[EvalLog] = None) -> TruthValue:
    v1 = eval_term(t1, interp, state, log)
    v2 = eval_term(t2, interp, state, log)
    if v1 == v2 and v1 is not WRONG_VALUE:
        return T
    if v1 is not WRONG_VALUE and domain_of(v1) == domain_of(v2):
        return F
    return W


def eval_call(g: Call, interp: Interpretation, state: Mapping[str, Value],
              log: Optional[EvalLog] = None) -> TruthValue:
    pred = interp.predicate(g.predicate)
    args = [eval_term(a, interp, state, log) for a in g.args]
    if any(a is WRONG_VALUE for a in args):
        return W
    return pred.apply(args)


def eval_goal(g: Goal, interp: Interpretation, state: Mapping[str, Value],
              log: Optional[EvalLog] = None) -> TruthValue:
    if isinstance(g, Unify):
        return eval_unify(g.left, g.right, interp, state, log)
    return eval_call(g, interp, state, log)


def eval_seq(goals: GoalSeq, interp: Interpretation, state: Mapping[str, Value],
             log: Optional[EvalLog] = None) -> TruthValue:
    return fold_and(eval_goal(g, interp, state, log) for g in goals)


def eval_body(body: Sequence[GoalSeq], interp: Interpretation,
              states: Sequence[Mapping[str, Value]],
              log: Optional[EvalLog] = None) -> TruthValue:
    if len(states) != len(body):
        raise ArityMismatch(f"body has {len(body)} goal sequences but {len(states)} states")
    return fold_or(eval_seq(seq, interp, s, log) for seq, s in zip(body, states))


def eval_clause(c: Clause, interp: Interpretation, states: Sequence[Mapping[str, Value]],
                log: Optional[EvalLog] = None) -> TruthValue:
    body = c.body if c.body else ((),)
    lhs = eval_body(body, interp, states, log)
    head = c.head_call
    rhs = fold_and(eval_call(head, interp, s, log) for s in states)
    return tv_implies(lhs, rhs)


# --- state enumeration --------------------------------------------------------


def enumerate_states(variables: Iterable[str], domains: Iterable[Domain],
                     cap: Optional[int] = None) -> Iterator[State]:
    """Every total assignment of ``variables`` over the term domains given."""
    names = sorted(set(variables))
    values: List[Value] = []
    for d in domains:
        if d.kind in ("basic", "tree"):
            values.extend(d.members)
    values.sort(key=value_key)
    yield from _product_states(names, [values] * len(names), cap)


def _product_states(names: List[str], choices: List[List[Value]],
                    cap: Optional[int]) -> Iterator[State]:
    cap = max_states_default() if cap is None else cap
    total = 1
    for c in choices:
        total *= len(c)
    if total > cap:
        raise UniverseTooLarge(f"{total} states exceed the cap of {cap}")
    for combo in itertools.product(*choices):
        yield dict(zip(names, combo))


def states_over(choices: Mapping[str, Sequence[Value]], cap: Optional[int] = None) -> Iterator[State]:
    """Assignments drawing each variable from its own candidate list."""
    names = sorted(choices)
    yield from _product_states(names, [list(choices[n]) for n in names], cap)


def branch_vars(c: Clause, k: int) -> List[str]:
    head: List[str] = []
    for a in c.head_args:
        for v in term_vars(a):
            if v not in head:
                head.append(v)
    seq = c.body[k] if c.body else ()
    return head + [v for v in seq_vars(seq) if v not in head]


def enumerate_state_lists(c: Clause, universe: Universe,
                          cap: Optional[int] = None) -> Iterator[List[State]]:
    """State lists [s1..sm] for a clause with m goal sequences."""
    cap = max_states_default() if cap is None else cap
    values = universe.values()
    m = max(1, len(c.body))
    per_branch = [branch_vars(c, k) for k in range(m)]
    total = 1
    for vs in per_branch:
        total *= len(values) ** len(vs)
    if total > cap:
        raise UniverseTooLarge(f"{total} state lists exceed the cap of {cap}")
    iters = [list(_product_states(vs, [values] * len(vs), cap)) for vs in per_branch]
    for combo in itertools.product(*iters):
        yield list(combo)


# --- least-model predicate tables ---------------------------------------------


def match_term(t: Term, v: Value, env: State, interp: Interpretation) -> Iterator[State]:
    """Extensions of ``env`` under which ``t`` evaluates to ``v``."""
    if isinstance(t, Var):
        if t.name in env:
            if env[t.name] == v:
                yield env
        else:
            out = dict(env)
            out[t.name] = v
            yield out
        return
    if isinstance(t, Const):
        if interp.constants.get(t.symbol) == v:
            yield env
        return
    func = interp.functors.get((t.functor, len(t.args)))
    if func is None:
        return
    for args in func.preimage(v):
        yield from _match_all(t.args, args, env, interp)


def _match_all(terms: Sequence[Term], values: Sequence[Value], env: State,
               interp: Interpretation) -> Iterator[State]:
    if not terms:
        yield env
        return
    for env2 in match_term(terms[0], values[0], env, interp):
        yield from _match_all(terms[1:], values[1:], env2, interp)


def _is_ground(t: Term, env: Mapping[str, Value]) -> bool:
    return all(v in env for v in term_vars(t))


def _goal_score(g: Goal, env: Mapping[str, Value]) -> int:
    if all(v in env for v in goal_vars(g)):
        return 0
    if isinstance(g, Unify):
        if _is_ground(g.left, env) or _is_ground(g.right, env):
            return 1
        return 3
    return 2


def solve_seq(goals: GoalSeq, interp: Interpretation, universe: Universe,
              truth: Mapping[str, Set[Tuple[Value, ...]]],
              env: Optional[State] = None) -> Iterator[State]:
    """States (over the goals' variables) making every goal true.

    Calls are resolved against ``truth``, the current approximation of each
    predicate's true tuples.  Unifications with one ground side are solved by
    matching against the function tables; anything else falls back to
    enumerating a variable over the universe.
    """
    yield from _solve(list(goals), dict(env or {}), interp, universe, truth)


def _solve(pending: List[Goal], env: State, interp: Interpretation, universe: Universe,
           truth: Mapping[str, Set[Tuple[Value, ...]]]) -> Iterator[State]:
    if not pending:
        yield env
        return
    idx = min(range(len(pending)), key=lambda i: (_goal_score(pending[i], env), i))
    g = pending[idx]
    rest = pending[:idx] + pending[idx + 1:]
    score = _goal_score(g, env)
    if isinstance(g, Call):
        pred = interp.predicate(g.predicate)
        if score == 0:
            args = tuple(eval_term(a, interp, env) for a in g.args)
            if pred.accepts(args) and args in truth.get(g.predicate, ()):
                yield from _solve(rest, env, interp, universe, truth)
            return
        for tup in sorted(truth.get(g.predicate, ()), key=lambda tp: tuple(value_key(x) for x in tp)):
            if not pred.accepts(tup):
                continue
            for env2 in _match_all(g.args, tup, env, interp):
                yield from _solve(rest, env2, interp, universe, truth)
        return
    if score == 0:
        if eval_unify(g.left, g.right, interp, env) is T:
            yield from _solve(rest, env, interp, universe, truth)
        return
    if score == 1:
        ground, other = (g.left, g.right) if _is_ground(g.left, env) else (g.right, g.left)
        v = eval_term(ground, interp, env)
        if v is WRONG_VALUE:
            return
        for env2 in match_term(other, v, env, interp):
            yield from _solve(rest, env2, interp, universe, truth)
        return
    name = next(v for v in goal_vars(g) if v not in env)
    for value in universe.values():
        env2 = dict(env)
        env2[name] = value
        yield from _solve(pending, env2, interp, universe, truth)


def _head_tuples(head_args: Sequence[Term], env: State, pred: PredFunc,
                 interp: Interpretation, universe: Universe) -> Iterator[Tuple[Value, ...]]:
    choices: List[List[Value]] = []
    for arg, doms in zip(head_args, pred.signature):
        if _is_ground(arg, env):
            v = eval_term(arg, interp, env)
            if v is WRONG_VALUE or domain_of(v) not in doms:
                return
            choices.append([v])
        elif isinstance(arg, Var):
            choices.append(universe.members(doms))
        else:
            raise ValueError("least_model expects normalized clauses")
    yield from itertools.product(*choices)


def least_model(program: Program, interp: Interpretation, universe: Universe,
                max_iterations: int = 10_000):
    """Least fixpoint of the clause semantics, starting from all-false tables.

    Each sweep recomputes every predicate from the previous sweep's tables.
    Returns the final true sets and the per-sweep history of those sets; the
    interpretation's predicate functions are updated in place.
    """
    preds = program.predicates()
    truth: Dict[str, Set[Tuple[Value, ...]]] = {p: set() for p in preds}
    history: List[Dict[str, FrozenSet[Tuple[Value, ...]]]] = []
    for _ in range(max_iterations):
        snapshot = {p: set(s) for p, s in truth.items()}
        changed = False
        for p in preds:
            clause = program.definition(p)
            pred = interp.predicate(p)
            found: Set[Tuple[Value, ...]] = set()
            for seq in clause.body or ((),):
                for env in solve_seq(seq, interp, universe, snapshot):
                    found.update(_head_tuples(clause.head_args, env, pred, interp, universe))
            if not found <= truth[p]:
                truth[p] |= found
                changed = True
        history.append({p: frozenset(s) for p, s in truth.items()})
        if not changed:
            break
    for p in preds:
        interp.predicates[p].true_set = frozenset(truth[p])
    return {p: frozenset(s) for p, s in truth.items()}, history
