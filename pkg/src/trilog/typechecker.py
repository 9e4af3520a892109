"""Type checking of normalized programs.

Checking a predicate happens in two stages.  First the branch contexts (the
types of each goal sequence's variables) are reconstructed by first-order
unification over flexible ``_T`` variables: unifications and constructor
applications give equalities, recursive calls are tied to the head types of
their branch, and calls to already-checked predicates instantiate the
callee's scheme.  Branches whose head types unify are merged into one
cluster; the predicate's type is the argument-wise sum over the clusters.

Second, the contexts are re-checked rule by rule to build a derivation tree
(VAR, CST, CPL, UNF, CLL, CON, CLS, RCLS) that :func:`validate_derivation`
re-verifies independently.

Unification additionally requires its common type to lie within a single
semantic domain, otherwise ``X = Y`` with ``X, Y : int + atom`` would be
accepted although it compares an integer with an atom.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

import networkx as nx

from trilog.ast import (
    Call,
    Clause,
    Compound,
    Const,
    Goal,
    GoalSeq,
    Program,
    Term,
    Unify,
    Var,
    seq_vars,
    show_seq,
    show_term,
)
from trilog.errors import (
    ArgumentTypeMismatch,
    CallArgNotSubtype,
    CalleeIllTyped,
    CyclicCallGraph,
    InvalidDerivation,
    MonomorphismViolation,
    OccursCheck,
    TypeCheckError,
    UnboundVariable,
    UndefinedPredicate,
    UnifyTypeMismatch,
    UnsatisfiableConstraints,
)
from trilog.normalizer import is_normal, normalize
from trilog.subtyping import is_subtype
from trilog.types import (
    BOOL_TYPE,
    DeclTable,
    PredicateType,
    SimpleType,
    TApp,
    TBool,
    TMu,
    TSum,
    TVar,
    TypeScheme,
    canon,
    domain_keys,
    free_vars,
    match_type,
    mk_sum,
    normalize_sum,
    show_type,
    subst,
)

Context = Dict[str, SimpleType]

FLEX = "_T"
RIGID = "_R"


def _is_flex(t: SimpleType) -> bool:
    return isinstance(t, TVar) and t.name.startswith(FLEX)


def _has_flex(t: SimpleType) -> bool:
    return any(v.startswith(FLEX) for v in free_vars(t))


def context_sum(g1: Mapping[str, SimpleType], g2: Mapping[str, SimpleType]) -> Context:
    """Shared subjects get the (normalized) sum of their types."""
    out: Context = dict(g1)
    for x, t in g2.items():
        out[x] = normalize_sum(TSum((out[x], t))) if x in out else t
    return out


def show_context(ctx: Mapping[str, SimpleType], decls: Optional[DeclTable] = None) -> str:
    inner = ", ".join(f"{x}: {show_type(t, decls)}" for x, t in ctx.items())
    return "{" + inner + "}"


# --- unification ------------------------------------------------------------------


class _Clash(Exception):
    def __init__(self, left: SimpleType, right: SimpleType):
        self.left, self.right = left, right
        super().__init__(f"{show_type(left)} vs {show_type(right)}")


class Unifier:
    """Substitution over flexible type variables."""

    def __init__(self, start: int = 0):
        self.s: Dict[str, SimpleType] = {}
        self.n = start

    def fresh(self) -> TVar:
        self.n += 1
        return TVar(f"{FLEX}{self.n}")

    def instantiate(self, t: SimpleType, params: Iterable[str]) -> SimpleType:
        return subst(t, {p: self.fresh() for p in params})

    def snapshot(self) -> Dict[str, SimpleType]:
        return dict(self.s)

    def restore(self, snap: Dict[str, SimpleType]) -> None:
        self.s = dict(snap)

    def resolve(self, t: SimpleType) -> SimpleType:
        if isinstance(t, TVar):
            if t.name in self.s:
                r = self.resolve(self.s[t.name])
                self.s[t.name] = r
                return r
            return t
        if isinstance(t, TSum):
            return TSum(tuple(self.resolve(i) for i in t.items))
        if isinstance(t, TApp):
            return TApp(t.functor, tuple(self.resolve(a) for a in t.args))
        if isinstance(t, TMu):
            return TMu(t.var, self.resolve(t.body))
        return t

    def unify(self, a: SimpleType, b: SimpleType) -> None:
        snap = self.snapshot()
        try:
            self._unify(a, b, frozenset())
        except (_Clash, OccursCheck):
            self.restore(snap)
            raise

    def _bind(self, v: str, t: SimpleType, bound: frozenset) -> None:
        if isinstance(t, TVar) and t.name == v:
            return
        fv = free_vars(t)
        if v in fv:
            raise OccursCheck(f"{v} occurs in {show_type(t)}", expected=v, found=show_type(t))
        if fv & bound:
            raise _Clash(TVar(v), t)
        self.s[v] = t

    def _unify(self, a: SimpleType, b: SimpleType, bound: frozenset) -> None:
        a, b = self.resolve(a), self.resolve(b)
        if _is_flex(a):
            return self._bind(a.name, b, bound)
        if _is_flex(b):
            return self._bind(b.name, a, bound)
        if not _has_flex(a) and not _has_flex(b):
            if canon(a) != canon(b):
                raise _Clash(a, b)
            return
        if type(a) is not type(b):
            raise _Clash(a, b)
        if isinstance(a, TApp):
            if a.functor != b.functor or len(a.args) != len(b.args):
                raise _Clash(a, b)
            for x, y in zip(a.args, b.args):
                self._unify(x, y, bound)
            return
        if isinstance(a, TMu):
            name = f"μ{len(bound)}#"
            self._unify(subst(a.body, {a.var: TVar(name)}), subst(b.body, {b.var: TVar(name)}),
                        bound | {name})
            return
        if isinstance(a, TSum):
            xs, ys = normalize_sum(a), normalize_sum(b)
            xs = xs.items if isinstance(xs, TSum) else (xs,)
            ys = ys.items if isinstance(ys, TSum) else (ys,)
            if len(xs) != len(ys):
                raise _Clash(a, b)
            for perm in itertools.permutations(ys):
                snap = self.snapshot()
                try:
                    for x, y in zip(xs, perm):
                        self._unify(x, y, bound)
                    return
                except (_Clash, OccursCheck):
                    self.restore(snap)
            raise _Clash(a, b)
        raise _Clash(a, b)


# --- derivations ------------------------------------------------------------------


@dataclass
class Derivation:
    rule: str
    context: Context
    subject: object
    type: SimpleType
    premises: List["Derivation"] = field(default_factory=list)
    side: List[str] = field(default_factory=list)

    def rules(self) -> Set[str]:
        out = {self.rule}
        for p in self.premises:
            out |= p.rules()
        return out

    def nodes(self) -> Iterable["Derivation"]:
        yield self
        for p in self.premises:
            yield from p.nodes()

    def subject_text(self) -> str:
        s = self.subject
        if isinstance(s, (Var, Const, Compound)):
            return show_term(s)
        if isinstance(s, (Unify, Call)):
            return str(s)
        if isinstance(s, tuple):
            return show_seq(s)
        if isinstance(s, Clause):
            return str(s.head_call)
        return str(s)

    def render(self, decls: Optional[DeclTable] = None, indent: int = 0) -> str:
        pad = "  " * indent
        ctx = f"{show_context(self.context, decls)} " if self.rule in ("CON", "CLS", "RCLS") else ""
        line = f"{pad}{self.rule:<4} {ctx}|- {self.subject_text()} : {show_type(self.type, decls)}"
        lines = [line] + [f"{pad}       where {s}" for s in self.side]
        lines += [p.render(decls, indent + 1) for p in self.premises]
        return "\n".join(lines)

    def to_json(self, decls: Optional[DeclTable] = None) -> dict:
        return {
            "rule": self.rule,
            "context": {x: show_type(t, decls) for x, t in self.context.items()},
            "subject": self.subject_text(),
            "type": show_type(self.type, decls),
            "side": list(self.side),
            "premises": [p.to_json(decls) for p in self.premises],
        }


# --- rule-by-rule checking ----------------------------------------------------------


def _tag(err: TypeCheckError, span) -> TypeCheckError:
    if err.span is None:
        err.span = span
    return err


class _TermChecker:
    """Types terms under a fixed context; constants and constructors get fresh
    instances of their declared types, solved by the enclosing goal."""

    def __init__(self, ctx: Mapping[str, SimpleType], decls: DeclTable, unifier: Unifier):
        self.ctx = ctx
        self.decls = decls
        self.u = unifier

    def term(self, t: Term) -> Derivation:
        if isinstance(t, Var):
            if t.name not in self.ctx:
                raise UnboundVariable(f"variable {t.name} has no type in the context", found=t.name)
            return Derivation("VAR", dict(self.ctx), t, self.ctx[t.name])
        if isinstance(t, Const):
            declared = self.decls.type_of_constant(t.symbol)
            inst = self.u.instantiate(declared, sorted(free_vars(declared)))
            return Derivation("CST", dict(self.ctx), t, inst,
                              side=[f"type({show_term(t)}) = {show_type(declared, self.decls)}"])
        ctor = self.decls.type_of_functor(t.functor, len(t.args))
        phi = {p: self.u.fresh() for p in ctor.params}
        premises = []
        for i, (arg, want) in enumerate(zip(t.args, ctor.arg_types)):
            d = self.term(arg)
            want_i = subst(want, phi)
            try:
                self.u.unify(d.type, want_i)
            except (_Clash, OccursCheck):
                raise ArgumentTypeMismatch(
                    f"argument {i + 1} of {t.functor}/{len(t.args)} has type "
                    f"{show_type(self.u.resolve(d.type), self.decls)}, expected "
                    f"{show_type(self.u.resolve(want_i), self.decls)}",
                    expected=show_type(self.u.resolve(want_i), self.decls),
                    found=show_type(self.u.resolve(d.type), self.decls)) from None
            premises.append(d)
        sig = " * ".join(show_type(a, self.decls) for a in ctor.arg_types)
        return Derivation("CPL", dict(self.ctx), t, subst(ctor.result, phi), premises,
                          side=[f"type({t.functor}) = {sig} -> {show_type(ctor.result, self.decls)}"])

    def finish(self, d: Derivation) -> Derivation:
        d.type = self.u.resolve(d.type)
        for p in d.premises:
            self.finish(p)
        return d


def check_term(ctx: Mapping[str, SimpleType], t: Term, decls: DeclTable) -> SimpleType:
    """The type of ``t`` under ``ctx`` (VAR, CST, CPL)."""
    return check_term_derivation(ctx, t, decls).type


def check_term_derivation(ctx: Mapping[str, SimpleType], t: Term, decls: DeclTable) -> Derivation:
    u = Unifier()
    tc = _TermChecker(ctx, decls, u)
    return tc.finish(tc.term(t))


def _callee_type(pred: str, schemes: Mapping[str, TypeScheme], program: Optional[Program],
                 span) -> PredicateType:
    if pred not in schemes:
        if program is not None and pred not in program.predicates():
            raise UndefinedPredicate(f"predicate {pred} has no clauses", span)
        raise CalleeIllTyped(f"callee {pred} is not well-typed", span)
    return schemes[pred].body


def check_goal(ctx: Mapping[str, SimpleType], goal: Goal, program: Optional[Program], decls: DeclTable,
               schemes: Mapping[str, TypeScheme],
               recursive: Optional[Tuple[str, Sequence[SimpleType]]] = None) -> Derivation:
    """UNF or CLL.  ``recursive`` names the predicate being defined and its
    head types in the current branch; calls to it must use exactly those."""
    if isinstance(goal, Unify):
        u = Unifier()
        tc = _TermChecker(ctx, decls, u)
        try:
            left = tc.term(goal.left)
            right = tc.term(goal.right)
        except TypeCheckError as err:
            raise _tag(err, goal.span)
        try:
            u.unify(left.type, right.type)
        except (_Clash, OccursCheck):
            lt, rt = u.resolve(left.type), u.resolve(right.type)
            raise UnifyTypeMismatch(
                f"{goal}: {show_type(lt, decls)} and {show_type(rt, decls)} differ",
                goal.span, expected=show_type(lt, decls), found=show_type(rt, decls)) from None
        tc.finish(left)
        tc.finish(right)
        common = left.type
        keys = domain_keys(common, decls)
        if len(keys) > 1:
            raise UnifyTypeMismatch(
                f"{goal}: common type {show_type(common, decls)} spans several domains",
                goal.span, expected="a single-domain type", found=show_type(common, decls))
        return Derivation("UNF", dict(ctx), goal, BOOL_TYPE, [left, right],
                          side=[f"common type {show_type(common, decls)}"])
    premises = []
    for a in goal.args:
        if not isinstance(a, Var):
            raise TypeCheckError(f"call argument {show_term(a)} is not a variable; normalize first", goal.span)
        if a.name not in ctx:
            raise UnboundVariable(f"variable {a.name} has no type in the context", goal.span, found=a.name)
        premises.append(Derivation("VAR", dict(ctx), a, ctx[a.name]))
    side: List[str] = []
    if recursive is not None and goal.predicate == recursive[0]:
        for i, (d, want) in enumerate(zip(premises, recursive[1])):
            if canon(d.type) != canon(want):
                raise MonomorphismViolation(
                    f"recursive call {goal}: argument {i + 1} has type {show_type(d.type, decls)} "
                    f"but the head has {show_type(want, decls)}",
                    goal.span, expected=show_type(want, decls), found=show_type(d.type, decls))
            side.append(f"recursive argument {i + 1}: {show_type(d.type, decls)} = head type")
        return Derivation("CLL", dict(ctx), goal, BOOL_TYPE, premises, side)
    callee = _callee_type(goal.predicate, schemes, program, goal.span)
    if len(callee.args) != len(goal.args):
        raise CallArgNotSubtype(f"{goal}: arity differs from {goal.predicate}'s type", goal.span)
    for i, (d, want) in enumerate(zip(premises, callee.args)):
        if not is_subtype(d.type, want):
            raise CallArgNotSubtype(
                f"{goal}: argument {i + 1} has type {show_type(d.type, decls)}, "
                f"not a subtype of {show_type(want, decls)}",
                goal.span, expected=show_type(want, decls), found=show_type(d.type, decls))
        side.append(f"{show_type(d.type, decls)} <= {show_type(want, decls)}")
    return Derivation("CLL", dict(ctx), goal, BOOL_TYPE, premises, side)


def check_seq(ctx: Mapping[str, SimpleType], seq: GoalSeq, program: Optional[Program], decls: DeclTable,
              schemes: Mapping[str, TypeScheme],
              recursive: Optional[Tuple[str, Sequence[SimpleType]]] = None) -> Derivation:
    premises = [check_goal(ctx, g, program, decls, schemes, recursive) for g in seq]
    return Derivation("CON", dict(ctx), seq, BOOL_TYPE, premises)


def check_clause(c: Clause, branch_contexts: Sequence[Mapping[str, SimpleType]], program: Optional[Program],
                 decls: DeclTable, schemes: Mapping[str, TypeScheme]) -> Derivation:
    """CLS (non-recursive) or RCLS (directly recursive) over given branch contexts."""
    body = c.body or ((),)
    if len(branch_contexts) != len(body):
        raise TypeCheckError(f"{c.head_predicate}: {len(body)} branches but {len(branch_contexts)} contexts")
    recursive = any(isinstance(g, Call) and g.predicate == c.head_predicate for seq in body for g in seq)
    heads = [a.name for a in c.head_args]
    premises = []
    side: List[str] = []
    total: Context = {}
    for k, (seq, ctx) in enumerate(zip(body, branch_contexts)):
        missing = [h for h in heads if h not in ctx]
        if missing:
            raise UnboundVariable(f"branch {k + 1} gives no type to {missing[0]}", c.span)
        head_types = [ctx[h] for h in heads]
        try:
            premises.append(check_seq(ctx, seq, program, decls, schemes,
                                      (c.head_predicate, head_types) if recursive else None))
        except TypeCheckError as err:
            err.branch = k + 1 if err.branch is None else err.branch
            err.predicate = c.head_predicate
            raise
        total = context_sum(total, ctx)
        if recursive:
            types = ", ".join(show_type(t, decls) for t in head_types)
            side.append(f"branch {k + 1}: recursive calls use ({types})")
    return Derivation("RCLS" if recursive else "CLS", total, c, BOOL_TYPE, premises, side=side)


# --- context reconstruction -----------------------------------------------------------


def _infer_term(t: Term, gamma: Context, decls: DeclTable, u: Unifier) -> SimpleType:
    if isinstance(t, Var):
        return gamma[t.name]
    if isinstance(t, Const):
        declared = decls.type_of_constant(t.symbol)
        return u.instantiate(declared, sorted(free_vars(declared)))
    ctor = decls.type_of_functor(t.functor, len(t.args))
    phi = {p: u.fresh() for p in ctor.params}
    for i, (arg, want) in enumerate(zip(t.args, ctor.arg_types)):
        got = _infer_term(arg, gamma, decls, u)
        try:
            u.unify(got, subst(want, phi))
        except _Clash as clash:
            raise UnsatisfiableConstraints(
                f"argument {i + 1} of {t.functor}: {show_type(u.resolve(clash.left), decls)} vs "
                f"{show_type(u.resolve(clash.right), decls)}",
                expected=show_type(u.resolve(subst(want, phi)), decls),
                found=show_type(u.resolve(got), decls)) from None
    return subst(ctor.result, phi)


def _instantiate_scheme(s: TypeScheme, u: Unifier) -> Tuple[SimpleType, ...]:
    phi = {v: u.fresh() for v in sorted(s.quantified | free_vars_pt(s.body))}
    return tuple(subst(a, phi) for a in s.body.args)


def free_vars_pt(pt: PredicateType) -> Set[str]:
    return set().union(set(), *(free_vars(a) for a in pt.args))


def _reconstruct(seq: GoalSeq, head_vars: Sequence[str], gamma: Context, rec_pred: Optional[str],
                 decls: DeclTable, schemes: Mapping[str, TypeScheme], program: Optional[Program],
                 u: Unifier) -> Context:
    for v in list(head_vars) + seq_vars(seq):
        if v not in gamma:
            gamma[v] = u.fresh()
    for g in seq:
        if not isinstance(g, Unify):
            continue
        try:
            left = _infer_term(g.left, gamma, decls, u)
            right = _infer_term(g.right, gamma, decls, u)
            u.unify(left, right)
        except _Clash:
            lt, rt = u.resolve(left), u.resolve(right)
            raise UnsatisfiableConstraints(
                f"{g}: {show_type(lt, decls)} vs {show_type(rt, decls)}", g.span,
                expected=show_type(lt, decls), found=show_type(rt, decls)) from None
        except TypeCheckError as err:
            raise _tag(err, g.span)
    for g in seq:
        if isinstance(g, Call) and g.predicate == rec_pred:
            for i, (a, h) in enumerate(zip(g.args, head_vars)):
                try:
                    u.unify(gamma[a.name], gamma[h])
                except (_Clash, OccursCheck):
                    at, ht = u.resolve(gamma[a.name]), u.resolve(gamma[h])
                    raise MonomorphismViolation(
                        f"recursive call {g}: argument {i + 1} has type {show_type(at, decls)} "
                        f"but the head has {show_type(ht, decls)}", g.span,
                        expected=show_type(ht, decls), found=show_type(at, decls)) from None
    for g in seq:
        if not isinstance(g, Call) or g.predicate == rec_pred:
            continue
        if not all(isinstance(a, Var) for a in g.args):
            raise TypeCheckError(f"call {g} is not normalized", g.span)
        callee = schemes.get(g.predicate)
        if callee is None:
            _callee_type(g.predicate, schemes, program, g.span)
        inst = _instantiate_scheme(callee, u)
        snap = u.snapshot()
        try:
            for a, t in zip(g.args, inst):
                u.unify(gamma[a.name], t)
        except (_Clash, OccursCheck):
            u.restore(snap)
            for a, t in zip(g.args, inst):
                if _is_flex(u.resolve(gamma[a.name])):
                    try:
                        u.unify(gamma[a.name], t)
                    except (_Clash, OccursCheck):
                        pass
    return gamma


def reconstruct_branch_context(branch: GoalSeq, head_vars: Sequence[str], program: Optional[Program],
                               decls: DeclTable, schemes: Optional[Mapping[str, TypeScheme]] = None,
                               recursive_predicate: Optional[str] = None) -> Context:
    """Types for the branch's variables solving its UNF/CPL equalities.

    Variables left unconstrained get distinct type variables (A, B, ...).
    """
    u = Unifier()
    gamma = _reconstruct(branch, head_vars, {}, recursive_predicate, decls, schemes or {}, program, u)
    resolved = {x: u.resolve(t) for x, t in gamma.items()}
    return _generalize([resolved])[0][0]


_LETTERS = [chr(c) for c in range(ord("A"), ord("Z") + 1)]


def _var_names(avoid: Set[str]) -> Iterable[str]:
    for n in itertools.count():
        for letter in _LETTERS:
            name = letter if n == 0 else f"{letter}{n}"
            if name not in avoid:
                yield name


def _generalize(contexts: Sequence[Context], head_vars: Sequence[str] = ()) -> Tuple[List[Context], Dict[str, str]]:
    """Rename leftover flexible variables to A, B, ... in order of appearance."""
    order: List[str] = []
    rigid: Set[str] = set()

    def visit(t: SimpleType) -> None:
        for v in _ordered_vars(t):
            if v.startswith(FLEX):
                if v not in order:
                    order.append(v)
            else:
                rigid.add(v)

    for h in head_vars:
        for ctx in contexts:
            if h in ctx:
                visit(ctx[h])
    for ctx in contexts:
        for t in ctx.values():
            visit(t)
    names = _var_names(rigid)
    mapping = {v: next(names) for v in order}
    phi = {k: TVar(v) for k, v in mapping.items()}
    return [{x: subst(t, phi) for x, t in ctx.items()} for ctx in contexts], mapping


def _ordered_vars(t: SimpleType, bound: frozenset = frozenset()) -> List[str]:
    if isinstance(t, TVar):
        return [] if t.name in bound else [t.name]
    if isinstance(t, TSum):
        return [v for i in t.items for v in _ordered_vars(i, bound)]
    if isinstance(t, TApp):
        return [v for a in t.args for v in _ordered_vars(a, bound)]
    if isinstance(t, TMu):
        return _ordered_vars(t.body, bound | {t.var})
    return []


def _rigid(ctx: Context) -> Context:
    phi = {}
    for t in ctx.values():
        for v in free_vars(t):
            if v.startswith(FLEX):
                phi[v] = TVar(RIGID + v[len(FLEX):])
    return {x: subst(t, phi) for x, t in ctx.items()}


# --- programs ---------------------------------------------------------------------------


@dataclass
class PredicateResult:
    predicate: str
    scheme: Optional[TypeScheme] = None
    branch_contexts: List[Context] = field(default_factory=list)
    derivation: Optional[Derivation] = None
    error: Optional[TypeCheckError] = None
    recursive: bool = False
    clusters: List[List[int]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class QueryResult:
    goals: GoalSeq
    context: Optional[Context] = None
    derivation: Optional[Derivation] = None
    error: Optional[TypeCheckError] = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class CheckResult:
    program: Program
    decls: DeclTable
    predicates: Dict[str, PredicateResult]
    queries: List[QueryResult]
    order: List[str]

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.predicates.values()) and all(q.ok for q in self.queries)

    @property
    def predicates_ok(self) -> bool:
        return all(r.ok for r in self.predicates.values())

    def schemes(self) -> Dict[str, TypeScheme]:
        return {p: r.scheme for p, r in self.predicates.items() if r.scheme is not None}

    def errors(self) -> List[TypeCheckError]:
        out = [r.error for r in self.predicates.values() if r.error is not None]
        return out + [q.error for q in self.queries if q.error is not None]

    def show_type(self, predicate: str) -> str:
        return self.decls.show(self.predicates[predicate].scheme)


def call_graph(program: Program) -> "nx.DiGraph":
    g = nx.DiGraph()
    for c in program.clauses:
        g.add_node(c.head_predicate)
        for seq in c.body:
            for goal in seq:
                if isinstance(goal, Call):
                    g.add_edge(c.head_predicate, goal.predicate)
    return g


def _check_order(program: Program) -> Tuple[List[str], Set[str]]:
    """Callees before callers; predicates on call cycles longer than one are
    returned separately."""
    g = call_graph(program)
    cyclic: Set[str] = set()
    for comp in nx.strongly_connected_components(g):
        if len(comp) > 1:
            cyclic |= comp
    cond = nx.condensation(g)
    order: List[str] = []
    for node in reversed(list(nx.topological_sort(cond))):
        members = sorted(cond.nodes[node]["members"], key=program.predicates().index)
        order.extend(members)
    return order, cyclic


def _scheme(args: Sequence[SimpleType]) -> TypeScheme:
    pt = PredicateType(tuple(args))
    return TypeScheme(frozenset(free_vars_pt(pt)), pt)


def _check_predicate(c: Clause, program: Program, decls: DeclTable, schemes: Mapping[str, TypeScheme],
                     annotations: Optional[Sequence[Mapping[str, SimpleType]]]) -> PredicateResult:
    body = c.body or ((),)
    heads = [a.name for a in c.head_args]
    recursive = any(isinstance(g, Call) and g.predicate == c.head_predicate for seq in body for g in seq)
    rec_pred = c.head_predicate if recursive else None
    result = PredicateResult(c.head_predicate, recursive=recursive)
    u = Unifier()
    gammas: List[Context] = []
    for k, seq in enumerate(body):
        seed = dict(annotations[k]) if annotations is not None else {}
        try:
            gammas.append(_reconstruct(seq, heads, seed, rec_pred, decls, schemes, program, u))
        except TypeCheckError as err:
            err.branch, err.predicate = k + 1, c.head_predicate
            raise

    def resolved(k: int) -> Context:
        return {x: u.resolve(t) for x, t in gammas[k].items()}

    def validate(branches: Sequence[int]) -> None:
        for k in branches:
            ctx = _rigid(resolved(k))
            try:
                check_seq(ctx, body[k], program, decls, schemes,
                          (c.head_predicate, [ctx[h] for h in heads]) if recursive else None)
            except TypeCheckError as err:
                err.branch, err.predicate = k + 1, c.head_predicate
                raise

    clusters: List[List[int]] = []
    for k in range(len(body)):
        placed = False
        if annotations is None:
            for cl in clusters:
                snap = u.snapshot()
                try:
                    for h in heads:
                        u.unify(gammas[cl[0]][h], gammas[k][h])
                    validate(cl + [k])
                    cl.append(k)
                    placed = True
                    break
                except (_Clash, OccursCheck, TypeCheckError):
                    u.restore(snap)
        if not placed:
            validate([k])
            clusters.append([k])
    contexts, _ = _generalize([resolved(k) for k in range(len(body))], heads)
    arg_types = []
    for h in heads:
        arg_types.append(normalize_sum(mk_sum([ctx[h] for ctx in contexts])))
    result.branch_contexts = contexts
    result.clusters = clusters
    result.scheme = _scheme(arg_types)
    result.derivation = check_clause(c, contexts, program, decls, schemes)
    return result


def check_query(goals: GoalSeq, program: Program, decls: DeclTable,
                schemes: Mapping[str, TypeScheme]) -> QueryResult:
    u = Unifier()
    out = QueryResult(goals)
    try:
        gamma = _reconstruct(goals, (), {}, None, decls, schemes, program, u)
        ctx = _generalize([{x: u.resolve(t) for x, t in gamma.items()}])[0][0]
        out.context = ctx
        out.derivation = check_seq(ctx, goals, program, decls, schemes)
    except TypeCheckError as err:
        out.error = err
    return out


def check_program(p: Program, decls: Optional[DeclTable] = None,
                  annotations: Optional[Mapping[str, Sequence[Mapping[str, SimpleType]]]] = None) -> CheckResult:
    """Check every predicate (callees first) and every query.

    ``annotations`` optionally supplies per-branch contexts for a predicate,
    bypassing reconstruction for it; they are still checked rule by rule.
    """
    if not is_normal(p):
        p = normalize(p)
    decls = decls if decls is not None else DeclTable(p.type_decls)
    order, cyclic = _check_order(p)
    results: Dict[str, PredicateResult] = {}
    schemes: Dict[str, TypeScheme] = {}
    graph = call_graph(p)
    for pred in order:
        c = p.definition(pred)
        if pred in cyclic:
            err = CyclicCallGraph(f"{pred} is mutually recursive; only direct recursion is supported", c.span)
            err.predicate = pred
            results[pred] = PredicateResult(pred, error=err)
            continue
        bad = [q for q in graph.successors(pred) if q != pred and not results[q].ok]
        if bad:
            err = CalleeIllTyped(f"{pred} calls {bad[0]}, which is not well-typed", c.span)
            err.predicate = pred
            results[pred] = PredicateResult(pred, error=err)
            continue
        try:
            res = _check_predicate(c, p, decls, schemes,
                                   annotations.get(pred) if annotations else None)
            schemes[pred] = res.scheme
        except TypeCheckError as err:
            err.predicate = pred
            res = PredicateResult(pred, error=err)
        results[pred] = res
    ordered = {q: results[q] for q in p.predicates()}
    queries = [check_query(q, p, decls, schemes) for q in p.queries]
    return CheckResult(p, decls, ordered, queries, order)


# --- independent validation ------------------------------------------------------------------


def validate_derivation(d: Derivation, program: Program, decls: DeclTable,
                        schemes: Mapping[str, TypeScheme]) -> None:
    """Re-verify every node against its rule schema; raises InvalidDerivation."""

    def bad(msg: str):
        raise InvalidDerivation(f"{d.rule} node for {d.subject_text()}: {msg}")

    same = lambda a, b: canon(a) == canon(b)
    if d.rule == "VAR":
        if not isinstance(d.subject, Var) or d.subject.name not in d.context:
            bad("subject is not a variable of the context")
        if not same(d.context[d.subject.name], d.type) or d.premises:
            bad("type differs from the context")
        return
    if d.rule == "CST":
        if not isinstance(d.subject, Const) or d.premises:
            bad("malformed constant node")
        declared = decls.type_of_constant(d.subject.symbol)
        if match_type(declared, d.type, free_vars(declared)) is None:
            bad("type is not an instance of the declared type")
        return
    if d.rule == "CPL":
        t = d.subject
        if not isinstance(t, Compound) or len(d.premises) != len(t.args):
            bad("malformed constructor node")
        ctor = decls.type_of_functor(t.functor, len(t.args))
        pattern = TApp("*", tuple(ctor.arg_types) + (ctor.result,))
        target = TApp("*", tuple(p.type for p in d.premises) + (d.type,))
        if match_type(pattern, target, ctor.params) is None:
            bad("argument and result types are not one instance of the constructor type")
        for p, arg in zip(d.premises, t.args):
            if p.subject != arg:
                bad("premise subject mismatch")
            validate_derivation(p, program, decls, schemes)
        return
    if not isinstance(d.type, TBool):
        bad("goal-level node is not typed bool")
    if d.rule == "UNF":
        g = d.subject
        if not isinstance(g, Unify) or len(d.premises) != 2:
            bad("malformed unification node")
        left, right = d.premises
        if left.subject != g.left or right.subject != g.right:
            bad("premise subject mismatch")
        if not same(left.type, right.type):
            bad("the two sides have different types")
        if len(domain_keys(left.type, decls)) > 1:
            bad("common type spans several domains")
        for p in d.premises:
            if p.context != d.context:
                bad("premise context differs")
            validate_derivation(p, program, decls, schemes)
        return
    if d.rule == "CLL":
        g = d.subject
        if not isinstance(g, Call) or len(d.premises) != len(g.args):
            bad("malformed call node")
        for p, arg in zip(d.premises, g.args):
            if p.rule != "VAR" or p.subject != arg:
                bad("call premises must type the argument variables")
            validate_derivation(p, program, decls, schemes)
        if g.predicate not in schemes:
            return  # recursive call, checked by the enclosing RCLS node
        want = schemes[g.predicate].body.args
        for p, w in zip(d.premises, want):
            if not is_subtype(p.type, w):
                bad(f"{show_type(p.type)} is not a subtype of {show_type(w)}")
        return
    if d.rule == "CON":
        if not isinstance(d.subject, tuple) or len(d.premises) != len(d.subject):
            bad("one premise per goal expected")
        for p, g in zip(d.premises, d.subject):
            if p.subject != g or p.context != d.context:
                bad("premise does not match its goal")
            validate_derivation(p, program, decls, schemes)
        return
    if d.rule in ("CLS", "RCLS"):
        c = d.subject
        if not isinstance(c, Clause):
            bad("subject is not a clause")
        body = c.body or ((),)
        if len(d.premises) != len(body):
            bad("one premise per goal sequence expected")
        recursive = any(isinstance(g, Call) and g.predicate == c.head_predicate for s in body for g in s)
        if recursive != (d.rule == "RCLS"):
            bad("CLS is for non-recursive and RCLS for recursive predicates")
        heads = [a.name for a in c.head_args]
        total: Context = {}
        for p, seq in zip(d.premises, body):
            if p.rule != "CON" or p.subject != seq:
                bad("premise is not the goal sequence's CON node")
            for h in heads:
                if h not in p.context:
                    bad(f"branch context lacks head variable {h}")
            if recursive:
                for g, gd in zip(seq, p.premises):
                    if isinstance(g, Call) and g.predicate == c.head_predicate:
                        for arg_d, h in zip(gd.premises, heads):
                            if not same(arg_d.type, p.context[h]):
                                bad("recursive call breaks the monomorphism restriction")
            validate_derivation(p, program, decls, schemes)
            total = context_sum(total, p.context)
        for h in heads:
            if not same(total[h], d.context.get(h, TBool())):
                bad(f"conclusion type of {h} is not the argument-wise sum of the branches")
        return
    bad("unknown rule")
