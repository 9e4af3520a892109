"""Surface syntax: programs (clauses, ``:- type`` declarations, ``?-`` queries)
and type expressions.

Bodies may nest ``;`` inside ``,`` with parentheses; they are flattened to a
disjunction of goal sequences by distributing conjunction over disjunction.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List, Optional, Set, Tuple, Union

from trilog.ast import (
    LIST_CONS,
    NIL,
    Call,
    Clause,
    Compound,
    Const,
    Goal,
    GoalSeq,
    Program,
    Term,
    TypeDecl,
    Unify,
    Var,
    make_list,
)
from trilog.errors import DuplicateTypeDecl, ParseError
from trilog.types import (
    BOOL_TYPE,
    BASE_TYPES,
    PredicateType,
    SimpleType,
    TApp,
    TBase,
    TConst,
    TMu,
    TSum,
    TVar,
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|%[^\n]*)
  | (?P<punct>:-|\?-|->|[()\[\]|,;=.+*])
  | (?P<int>-?[0-9]+)
  | (?P<qatom>'(?:[^'\\]|\\.)*')
  | (?P<var>[A-Z_][A-Za-z0-9_]*)
  | (?P<greek>[α-ωΑ-Ω][A-Za-z0-9_]*)
  | (?P<mu>μ)
  | (?P<atom>[a-z][A-Za-z0-9_]*)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # punct | int | qatom | var | greek | atom | eof
    text: str
    line: int
    column: int

    @property
    def pos(self) -> Tuple[int, int]:
        return (self.line, self.column)


def tokenize(source: str) -> List[Token]:
    tokens: List[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        text = m.group()
        if kind != "ws":
            if kind == "mu":
                kind, text = "atom", "mu"
            elif kind == "qatom":
                text = re.sub(r"\\(.)", r"\1", text[1:-1])
            tokens.append(Token(kind, text, line, pos - line_start + 1))
        for i, ch in enumerate(m.group()):
            if ch == "\n":
                line += 1
                line_start = pos + i + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.toks = tokenize(source)
        self.i = 0

    # token helpers

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, offset: int = 1) -> Token:
        return self.toks[min(self.i + offset, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        return self.tok.kind == "punct" and self.tok.text == text

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected '{text}'")
        return self.advance()

    def fail(self, message: str):
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        raise ParseError(f"{message}, found {found}", t.line, t.column)

    # program level

    def program(self) -> Program:
        clauses: List[Clause] = []
        decls: List[TypeDecl] = []
        queries: List[GoalSeq] = []
        seen: Set[str] = set()
        while self.tok.kind != "eof":
            if self.at(":-"):
                d = self.type_decl()
                if d.name in seen:
                    raise DuplicateTypeDecl(f"type {d.name} declared twice", d.span)
                seen.add(d.name)
                decls.append(d)
            elif self.at("?-"):
                start = self.advance()
                body = self.body()
                self.expect(".")
                if len(body) != 1:
                    raise ParseError("a query is a single goal sequence", *start.pos)
                queries.append(body[0])
            else:
                clauses.append(self.clause())
        return Program(tuple(clauses), tuple(decls), tuple(queries))

    def type_decl(self) -> TypeDecl:
        start = self.expect(":-")
        if not (self.tok.kind == "atom" and self.tok.text == "type"):
            self.fail("expected 'type' after ':-'")
        self.advance()
        name_tok = self.tok
        if name_tok.kind != "atom":
            self.fail("expected a type name")
        self.advance()
        params: List[str] = []
        if self.at("("):
            self.advance()
            if not self.at(")"):
                while True:
                    if self.tok.kind not in ("var", "greek"):
                        self.fail("expected a type parameter")
                    params.append(self.advance().text)
                    if not self.at(","):
                        break
                    self.advance()
            self.expect(")")
        self.expect("=")
        body = self.type_sum(set(params), allow_vars=True)
        self.expect(".")
        return TypeDecl(name_tok.text, tuple(params), body, start.pos)

    def clause(self) -> Clause:
        start = self.tok
        head = self.callable_term()
        if isinstance(head, Var):
            raise ParseError("clause head must be an atom or compound term", *start.pos)
        name, args = (head.symbol, ()) if isinstance(head, Const) else (head.functor, head.args)
        body: Tuple[GoalSeq, ...] = ()
        if self.at(":-"):
            self.advance()
            body = self.body()
        self.expect(".")
        return Clause(name, tuple(args), body, start.pos)

    # bodies: disjunctive normal form

    def body(self) -> Tuple[GoalSeq, ...]:
        branches = list(self.conj())
        while self.at(";"):
            self.advance()
            branches.extend(self.conj())
        return tuple(branches)

    def conj(self) -> List[GoalSeq]:
        result: List[GoalSeq] = list(self.primary())
        while self.at(","):
            self.advance()
            right = self.primary()
            result = [left + r for left in result for r in right]
        return result

    def primary(self) -> List[GoalSeq]:
        if self.at("("):
            self.advance()
            inner = self.body()
            self.expect(")")
            return list(inner)
        if self.tok.kind == "atom" and self.tok.text == "true" and not self.peek().text == "(":
            self.advance()
            return [()]
        return [(self.goal(),)]

    def goal(self) -> Goal:
        start = self.tok
        left = self.term()
        if self.at("="):
            self.advance()
            right = self.term()
            return Unify(left, right, start.pos)
        if isinstance(left, Const) and start.kind in ("atom", "qatom"):
            return Call(left.symbol, (), start.pos)
        if isinstance(left, Compound) and start.kind in ("atom", "qatom"):
            return Call(left.functor, left.args, start.pos)
        raise ParseError("expected a goal (call or unification)", *start.pos)

    # terms

    def callable_term(self) -> Term:
        if self.tok.kind not in ("atom", "qatom"):
            self.fail("expected a predicate name")
        return self.term()

    def term(self) -> Term:
        t = self.tok
        if t.kind == "var":
            self.advance()
            return Var(t.text)
        if t.kind == "int":
            self.advance()
            return Const(str(int(t.text)))
        if t.kind in ("atom", "qatom"):
            self.advance()
            if self.at("("):
                self.advance()
                args = [self.term()]
                while self.at(","):
                    self.advance()
                    args.append(self.term())
                self.expect(")")
                return Compound(t.text, tuple(args))
            return Const(t.text)
        if self.at("["):
            self.advance()
            if self.at("]"):
                self.advance()
                return Const(NIL)
            items = [self.term()]
            while self.at(","):
                self.advance()
                items.append(self.term())
            tail: Optional[Term] = None
            if self.at("|"):
                self.advance()
                tail = self.term()
            self.expect("]")
            return make_list(items, tail)
        self.fail("expected a term")

    # types

    def type_sum(self, bound: Set[str], allow_vars: bool = True) -> SimpleType:
        items = [self.type_atom(bound)]
        while self.at("+"):
            self.advance()
            items.append(self.type_atom(bound))
        return items[0] if len(items) == 1 else TSum(tuple(items))

    def type_atom(self, bound: Set[str]) -> SimpleType:
        t = self.tok
        if t.kind == "atom" and t.text == "mu" and self.peek().kind in ("atom", "var", "greek") \
                and self.peek(2).text == ".":
            self.advance()
            var = self.advance().text
            self.expect(".")
            body = self.type_sum(bound | {var})
            return TMu(var, body)
        if t.kind == "greek" and t.text.startswith("μ") and len(t.text) > 1 and self.peek().text == ".":
            # "μx. body" written without a space
            self.advance()
            self.expect(".")
            var = t.text[1:]
            return TMu(var, self.type_sum(bound | {var}))
        if t.kind in ("var", "greek"):
            self.advance()
            return TVar(t.text)
        if t.kind == "int":
            self.advance()
            return TConst(str(int(t.text)))
        if t.kind in ("atom", "qatom"):
            self.advance()
            if t.kind == "atom" and t.text in bound and not self.at("("):
                return TVar(t.text)
            if self.at("("):
                self.advance()
                args = [self.type_sum(bound)]
                while self.at(","):
                    self.advance()
                    args.append(self.type_sum(bound))
                self.expect(")")
                return TApp(t.text, tuple(args))
            if t.kind == "atom" and t.text in BASE_TYPES:
                return TBase(t.text)
            if t.kind == "atom" and t.text == "bool":
                return BOOL_TYPE
            return TConst(t.text)
        if self.at("["):
            self.advance()
            if self.at("]"):
                self.advance()
                return TConst(NIL)
            head = self.type_sum(bound)
            self.expect("|")
            tail = self.type_sum(bound)
            self.expect("]")
            return TApp(LIST_CONS, (head, tail))
        if self.at("("):
            self.advance()
            inner = self.type_sum(bound)
            self.expect(")")
            return inner
        self.fail("expected a type")

    def any_type(self) -> Union[SimpleType, PredicateType]:
        if self.at("(") and self.peek().text == ")" and self.peek().kind == "punct":
            self.advance()
            self.advance()
            self.expect("->")
            self._expect_bool()
            return PredicateType(())
        first = self.type_sum(set())
        if not (self.at("*") or self.at("->")):
            return first
        args = [first]
        while self.at("*"):
            self.advance()
            args.append(self.type_sum(set()))
        self.expect("->")
        self._expect_bool()
        return PredicateType(tuple(args))

    def _expect_bool(self) -> None:
        if not (self.tok.kind == "atom" and self.tok.text == "bool"):
            self.fail("predicate types end in 'bool'")
        self.advance()

    def done(self) -> None:
        if self.tok.kind != "eof":
            self.fail("unexpected trailing input")


def parse_program(source: str) -> Program:
    return _Parser(source).program()


def parse_term(source: str) -> Term:
    p = _Parser(source)
    t = p.term()
    p.done()
    return t


def parse_goals(source: str) -> Tuple[GoalSeq, ...]:
    p = _Parser(source)
    body = p.body()
    if p.at("."):
        p.advance()
    p.done()
    return body


def parse_type(source: str) -> Union[SimpleType, PredicateType]:
    """A simple type, or a predicate type ``t1 * ... * tn -> bool``."""
    p = _Parser(source)
    t = p.any_type()
    p.done()
    return t
