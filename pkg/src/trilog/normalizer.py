"""Reduction of multi-clause predicates to single-clause normal form.

``p(t11..t1n) :- b1.  ...  p(tm1..tmn) :- bm.`` becomes
``p(_A1..._An) :- (_A1 = t11, ..., b1') ; ... ; (_A1 = tm1, ..., bm')`` where
every call argument in ``bi'`` is a fresh ``_Fk`` bound by a preceding
unification, and each goal sequence is renamed apart from the others.
"""

from __future__ import annotations

from typing import Dict, Iterable, List, Set, Tuple

from trilog.ast import (
    Call,
    Clause,
    GoalSeq,
    Program,
    Term,
    Unify,
    Var,
    clause_vars,
    rename_goal,
    rename_term,
    seq_vars,
    term_vars,
)
from trilog.errors import ArityMismatch, UndefinedPredicate


def _fresh(base: str, used: Set[str]) -> str:
    n = 2
    while f"{base}_{n}" in used:
        n += 1
    return f"{base}_{n}"


class _Fresh:
    """Per-clause supply of ``_Fk`` names."""

    def __init__(self, used: Set[str]):
        self.used = used
        self.k = 0

    def next(self) -> str:
        while True:
            self.k += 1
            name = f"_F{self.k}"
            if name not in self.used:
                self.used.add(name)
                return name


def _flatten(goals: Iterable, fresh: _Fresh) -> GoalSeq:
    out: List = []
    for g in goals:
        if isinstance(g, Call):
            args: List[Term] = []
            for a in g.args:
                v = Var(fresh.next())
                out.append(Unify(v, a, g.span))
                args.append(v)
            out.append(Call(g.predicate, tuple(args), g.span))
        else:
            out.append(g)
    return tuple(out)


def _check_calls(raw: Program) -> None:
    arities: Dict[str, int] = {}
    for c in raw.clauses:
        known = arities.setdefault(c.head_predicate, c.arity)
        if known != c.arity:
            raise ArityMismatch(
                f"{c.head_predicate} is defined with arities {known} and {c.arity}", c.span)
    seqs = [s for c in raw.clauses for s in c.body] + list(raw.queries)
    for seq in seqs:
        for g in seq:
            if not isinstance(g, Call):
                continue
            if g.predicate not in arities:
                raise UndefinedPredicate(f"predicate {g.predicate}/{len(g.args)} has no clauses", g.span)
            if arities[g.predicate] != len(g.args):
                raise ArityMismatch(
                    f"{g.predicate} called with {len(g.args)} arguments but defined with "
                    f"{arities[g.predicate]}", g.span)


def clause_is_normal(c: Clause) -> bool:
    heads = c.head_args
    if not all(isinstance(a, Var) for a in heads):
        return False
    names = [a.name for a in heads]
    if len(set(names)) != len(names):
        return False
    head_set = set(names)
    seen: Set[str] = set()
    for seq in c.body:
        for g in seq:
            if isinstance(g, Call) and not all(isinstance(a, Var) for a in g.args):
                return False
        local = set(seq_vars(seq)) - head_set
        if local & seen:
            return False
        seen |= local
    return True


def is_normal(p: Program) -> bool:
    names = [c.head_predicate for c in p.clauses]
    if len(set(names)) != len(names):
        return False
    if not all(clause_is_normal(c) for c in p.clauses):
        return False
    return all(isinstance(a, Var) for q in p.queries for g in q if isinstance(g, Call) for a in g.args)


def _rename_normal(c: Clause) -> Clause:
    """Rename the head of an already-normal clause to ``_A1.._An``."""
    targets = [f"_A{j}" for j in range(1, c.arity + 1)]
    mapping: Dict[str, str] = {a.name: t for a, t in zip(c.head_args, targets)}
    used = set(clause_vars(c)) | set(targets)
    for v in clause_vars(c):
        if v not in mapping and v in targets:
            mapping[v] = _fresh(v, used)
            used.add(mapping[v])
    return Clause(
        c.head_predicate,
        tuple(Var(mapping[a.name]) for a in c.head_args),
        tuple(tuple(rename_goal(g, mapping) for g in seq) for seq in c.body),
        c.span,
    )


def normalize_predicate(clauses: List[Clause]) -> Clause:
    first = clauses[0]
    if len(clauses) == 1 and clause_is_normal(first) and first.body:
        return _rename_normal(first)
    n = first.arity
    heads = tuple(Var(f"_A{j}") for j in range(1, n + 1))
    used: Set[str] = {h.name for h in heads}
    fresh = _Fresh(used)
    branches: List[GoalSeq] = []
    for c in clauses:
        for seq in c.body or ((),):
            local: List[str] = []
            for a in c.head_args:
                for v in term_vars(a):
                    if v not in local:
                        local.append(v)
            for v in seq_vars(seq):
                if v not in local:
                    local.append(v)
            mapping: Dict[str, str] = {}
            for v in local:
                new = v if v not in used and not v.startswith("_F") else _fresh(v, used)
                mapping[v] = new
                used.add(new)
            goals: List = [Unify(h, rename_term(a, mapping), c.span) for h, a in zip(heads, c.head_args)]
            goals.extend(rename_goal(g, mapping) for g in seq)
            branches.append(_flatten(goals, fresh))
    return Clause(first.head_predicate, heads, tuple(branches), first.span)


def normalize(raw: Program) -> Program:
    _check_calls(raw)
    grouped: Dict[str, List[Clause]] = {}
    for c in raw.clauses:
        grouped.setdefault(c.head_predicate, []).append(c)
    clauses = tuple(normalize_predicate(cs) for cs in grouped.values())
    queries = []
    for q in raw.queries:
        fresh = _Fresh(set(seq_vars(q)))
        if all(isinstance(a, Var) for g in q if isinstance(g, Call) for a in g.args):
            queries.append(q)
        else:
            queries.append(_flatten(q, fresh))
    return Program(clauses, raw.type_decls, tuple(queries))


# --- alpha-equivalence -----------------------------------------------------------


def _canonical_names(names: Iterable[str]) -> Dict[str, str]:
    out: Dict[str, str] = {}
    for v in names:
        out.setdefault(v, f"V{len(out)}")
    return out


def alpha_equivalent(c1: Clause, c2: Clause) -> bool:
    """Equality up to a bijective renaming of variables."""
    if c1.head_predicate != c2.head_predicate or c1.arity != c2.arity or len(c1.body) != len(c2.body):
        return False

    def canon(c: Clause) -> Tuple:
        m = _canonical_names(clause_vars(c))
        return (
            tuple(rename_term(a, m) for a in c.head_args),
            tuple(tuple(rename_goal(g, m) for g in seq) for seq in c.body),
        )

    return canon(c1) == canon(c2)


def alpha_equivalent_programs(p1: Program, p2: Program) -> bool:
    if [c.head_predicate for c in p1.clauses] != [c.head_predicate for c in p2.clauses]:
        return False
    if len(p1.queries) != len(p2.queries):
        return False
    for q1, q2 in zip(p1.queries, p2.queries):
        c1, c2 = Clause("?", (), (q1,)), Clause("?", (), (q2,))
        if not alpha_equivalent(c1, c2):
            return False
    return all(alpha_equivalent(a, b) for a, b in zip(p1.clauses, p2.clauses))
