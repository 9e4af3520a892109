"""Abstract syntax of the mini logic language.

Terms, goals and clauses are frozen dataclasses so they can be hashed, shared
and compared structurally.  Source positions ride along in ``span`` fields that
are excluded from equality, which is what makes ``parse(pretty(p)) == p`` a
meaningful round-trip property.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Dict, Iterator, List, Optional, Tuple, Union

from trilog.errors import Span

if TYPE_CHECKING:
    from trilog.types import SimpleType

LIST_CONS = "[|]"
NIL = "[]"


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Const:
    symbol: str

    def __str__(self) -> str:
        return quote_atom(self.symbol)


@dataclass(frozen=True)
class Compound:
    functor: str
    args: Tuple["Term", ...]

    def __post_init__(self):
        if not self.args:
            raise ValueError("compound terms need at least one argument")

    def __str__(self) -> str:
        return show_term(self)


Term = Union[Var, Const, Compound]


@dataclass(frozen=True)
class Unify:
    left: Term
    right: Term
    span: Span = field(default=None, compare=False, repr=False)

    def __str__(self) -> str:
        return f"{show_term(self.left)} = {show_term(self.right)}"


@dataclass(frozen=True)
class Call:
    predicate: str
    args: Tuple[Term, ...]
    span: Span = field(default=None, compare=False, repr=False)

    def __str__(self) -> str:
        if not self.args:
            return quote_atom(self.predicate)
        return f"{quote_atom(self.predicate)}({', '.join(show_term(a) for a in self.args)})"


Goal = Union[Unify, Call]
GoalSeq = Tuple[Goal, ...]


@dataclass(frozen=True)
class Clause:
    """``head_predicate(head_args) :- body``.

    ``body`` is the disjunction of goal sequences.  A fact has an empty body;
    an empty goal sequence inside a body stands for ``true``.
    """

    head_predicate: str
    head_args: Tuple[Term, ...]
    body: Tuple[GoalSeq, ...] = ()
    span: Span = field(default=None, compare=False, repr=False)

    @property
    def arity(self) -> int:
        return len(self.head_args)

    @property
    def head_call(self) -> Call:
        return Call(self.head_predicate, self.head_args, self.span)

    def __str__(self) -> str:
        return show_clause(self)


@dataclass(frozen=True)
class TypeDecl:
    """``:- type name(params) = body.`` with the body kept as written."""

    name: str
    params: Tuple[str, ...]
    body: "SimpleType"
    span: Span = field(default=None, compare=False, repr=False)

    def __str__(self) -> str:
        head = self.name
        if self.params:
            head += "(" + ", ".join(self.params) + ")"
        return f":- type {head} = {self.body}."


@dataclass(frozen=True)
class Program:
    clauses: Tuple[Clause, ...] = ()
    type_decls: Tuple[TypeDecl, ...] = ()
    queries: Tuple[GoalSeq, ...] = ()

    def predicates(self) -> List[str]:
        seen: Dict[str, None] = {}
        for c in self.clauses:
            seen.setdefault(c.head_predicate, None)
        return list(seen)

    def clauses_for(self, predicate: str) -> List[Clause]:
        return [c for c in self.clauses if c.head_predicate == predicate]

    def definition(self, predicate: str) -> Clause:
        """The single clause of ``predicate`` in a normalized program."""
        found = self.clauses_for(predicate)
        if len(found) != 1:
            raise KeyError(f"{predicate} has {len(found)} clauses")
        return found[0]

    def arity_of(self, predicate: str) -> int:
        for c in self.clauses:
            if c.head_predicate == predicate:
                return c.arity
        raise KeyError(predicate)


Syntax = Union[Var, Const, Compound, Unify, Call, Clause, Tuple[GoalSeq, ...]]


def or_degree(m) -> int:
    """Number of states needed to evaluate ``m``."""
    if isinstance(m, Clause):
        return max(1, len(m.body))
    if isinstance(m, tuple) and m and all(isinstance(s, tuple) for s in m):
        return len(m)
    return 1


def term_vars(t: Term) -> Iterator[str]:
    if isinstance(t, Var):
        yield t.name
    elif isinstance(t, Compound):
        for a in t.args:
            yield from term_vars(a)


def goal_vars(g: Goal) -> Iterator[str]:
    if isinstance(g, Unify):
        yield from term_vars(g.left)
        yield from term_vars(g.right)
    else:
        for a in g.args:
            yield from term_vars(a)


def seq_vars(seq: GoalSeq) -> List[str]:
    out: Dict[str, None] = {}
    for g in seq:
        for v in goal_vars(g):
            out.setdefault(v, None)
    return list(out)


def clause_vars(c: Clause) -> List[str]:
    out: Dict[str, None] = {}
    for a in c.head_args:
        for v in term_vars(a):
            out.setdefault(v, None)
    for seq in c.body:
        for v in seq_vars(seq):
            out.setdefault(v, None)
    return list(out)


def term_symbols(t: Term) -> Iterator[Tuple[str, int]]:
    """Yields (symbol, arity) for constants and functors in ``t``."""
    if isinstance(t, Const):
        yield (t.symbol, 0)
    elif isinstance(t, Compound):
        yield (t.functor, len(t.args))
        for a in t.args:
            yield from term_symbols(a)


def program_symbols(p: Program) -> List[Tuple[str, int]]:
    out: Dict[Tuple[str, int], None] = {}

    def visit_goal(g: Goal) -> None:
        terms = (g.left, g.right) if isinstance(g, Unify) else g.args
        for t in terms:
            for s in term_symbols(t):
                out.setdefault(s, None)

    for c in p.clauses:
        for a in c.head_args:
            for s in term_symbols(a):
                out.setdefault(s, None)
        for seq in c.body:
            for g in seq:
                visit_goal(g)
    for q in p.queries:
        for g in q:
            visit_goal(g)
    return list(out)


def rename_term(t: Term, mapping: Dict[str, str]) -> Term:
    if isinstance(t, Var):
        return Var(mapping.get(t.name, t.name))
    if isinstance(t, Compound):
        return Compound(t.functor, tuple(rename_term(a, mapping) for a in t.args))
    return t


def rename_goal(g: Goal, mapping: Dict[str, str]) -> Goal:
    if isinstance(g, Unify):
        return Unify(rename_term(g.left, mapping), rename_term(g.right, mapping), g.span)
    return Call(g.predicate, tuple(rename_term(a, mapping) for a in g.args), g.span)


# --- printing -------------------------------------------------------------

_PLAIN_ATOM = re.compile(r"^[a-z][A-Za-z0-9_]*$")
_INTEGER = re.compile(r"^-?[0-9]+$")


def is_integer_symbol(symbol: str) -> bool:
    return bool(_INTEGER.match(symbol))


def quote_atom(symbol: str) -> str:
    if symbol == NIL or _PLAIN_ATOM.match(symbol) or is_integer_symbol(symbol):
        return symbol
    return "'" + symbol.replace("\\", "\\\\").replace("'", "\\'") + "'"


def show_term(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Const):
        return quote_atom(t.symbol)
    if t.functor == LIST_CONS and len(t.args) == 2:
        items = [show_term(t.args[0])]
        rest = t.args[1]
        while isinstance(rest, Compound) and rest.functor == LIST_CONS and len(rest.args) == 2:
            items.append(show_term(rest.args[0]))
            rest = rest.args[1]
        if rest == Const(NIL):
            return "[" + ", ".join(items) + "]"
        return "[" + ", ".join(items) + "|" + show_term(rest) + "]"
    return f"{quote_atom(t.functor)}({', '.join(show_term(a) for a in t.args)})"


def show_seq(seq: GoalSeq) -> str:
    if not seq:
        return "true"
    return ", ".join(str(g) for g in seq)


def show_clause(c: Clause) -> str:
    head = str(c.head_call)
    if not c.body:
        return head + "."
    if len(c.body) == 1:
        return f"{head} :- {show_seq(c.body[0])}."
    branches = "\n  ; ".join(f"( {show_seq(s)} )" for s in c.body)
    return f"{head} :-\n    {branches}."


def pretty(p: Program) -> str:
    """Source text that parses back to a structurally equal program."""
    lines = [str(d) for d in p.type_decls]
    lines += [show_clause(c) for c in p.clauses]
    lines += [f"?- {show_seq(q)}." for q in p.queries]
    if not lines:
        return ""
    return "\n".join(lines) + "\n"


def make_list(items, tail: Optional[Term] = None) -> Term:
    out: Term = tail if tail is not None else Const(NIL)
    for item in reversed(list(items)):
        out = Compound(LIST_CONS, (item, out))
    return out
