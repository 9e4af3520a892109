import pytest
from hypothesis import given, settings, strategies as st

from trilog.ast import (
    NIL,
    Call,
    Clause,
    Compound,
    Const,
    Program,
    Unify,
    Var,
    make_list,
    or_degree,
    pretty,
    show_term,
)
from trilog.errors import DuplicateTypeDecl, ParseError
from trilog.parser import parse_goals, parse_program, parse_term, parse_type, tokenize
from trilog.soundness import generate_program
from trilog.types import BOOL_TYPE, PredicateType, TApp, TBase, TConst, TMu, TSum, TVar


def test_clause_and_disjunction():
    p = parse_program("p(X) :- X = 1 ; X = a.")
    (c,) = p.clauses
    assert c.head_predicate == "p" and c.head_args == (Var("X"),)
    assert c.body == ((Unify(Var("X"), Const("1")),), (Unify(Var("X"), Const("a")),))
    assert or_degree(c) == 2


def test_facts_and_true():
    p = parse_program("f(a).\ng :- true.")
    assert p.clauses[0].body == ()
    assert p.clauses[1].body == ((),)
    assert or_degree(p.clauses[0]) == 1


def test_nested_disjunction_distributes():
    (c,) = parse_program("p(X,Y) :- (X = 1 ; X = 2), Y = a.").clauses
    assert len(c.body) == 2
    assert all(seq[-1] == Unify(Var("Y"), Const("a")) for seq in c.body)


def test_lists():
    t = parse_term("[1, 2|T]")
    assert t == make_list([Const("1"), Const("2")], Var("T"))
    assert parse_term("[]") == Const(NIL)
    assert show_term(t) == "[1, 2|T]"


def test_type_declarations_and_queries():
    p = parse_program(":- type list(A) = [] + [A|list(A)].\n?- append([], 1, 1).\nappend(X,Y,Z).")
    (d,) = p.type_decls
    assert d.params == ("A",)
    assert d.body == TSum((TConst(NIL), TApp("[|]", (TVar("A"), TApp("list", (TVar("A"),))))))
    assert len(p.queries) == 1 and isinstance(p.queries[0][0], Call)


def test_types():
    assert parse_type("int + atom") == TSum((TBase("int"), TBase("atom")))
    assert parse_type("mu a. [] + [int|a]") == TMu("a", TSum((TConst(NIL), TApp("[|]", (TBase("int"), TVar("a"))))))
    assert parse_type("int * A -> bool") == PredicateType((TBase("int"), TVar("A")))
    assert parse_type("() -> bool") == PredicateType(())
    assert parse_type("bool") == BOOL_TYPE
    assert parse_type("μx. s(x) + z") == TMu("x", TSum((TApp("s", (TVar("x"),)), TConst("z"))))


def test_comments_and_quoted_atoms():
    p = parse_program("% a comment\np('hello world', -3).")
    assert p.clauses[0].head_args == (Const("hello world"), Const("-3"))


@pytest.mark.parametrize("source,line,column", [
    ("p(X) :- X = .", 1, 13),
    ("p(X) :- X = 1", 1, 14),
    ("\n  p(X) :- @.", 2, 11),
])
def test_parse_error_positions(source, line, column):
    with pytest.raises(ParseError) as info:
        parse_program(source)
    assert (info.value.line, info.value.column) == (line, column)


def test_duplicate_declaration():
    with pytest.raises(DuplicateTypeDecl):
        parse_program(":- type t = a.\n:- type t = b.")


def test_variable_head_rejected():
    with pytest.raises(ParseError):
        parse_program("X :- true.")


def test_empty_program():
    assert parse_program("") == Program()
    assert pretty(Program()) == ""
    assert tokenize("")[-1].kind == "eof"


def test_goals():
    assert parse_goals("X = 1, p(X)") == ((Unify(Var("X"), Const("1")), Call("p", (Var("X"),))),)


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_round_trip_generated(seed):
    p = generate_program(seed)
    assert parse_program(pretty(p)) == p


def test_round_trip_quoting():
    head = (Const("it's"), Const("[]"), Compound("f", (Const("A b"),)))
    p = Program((Clause("p", head, ()),))
    assert parse_program(pretty(p)) == p
