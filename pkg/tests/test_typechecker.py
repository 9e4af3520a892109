import pytest

from trilog.ast import Const, Unify, Var
from trilog.errors import (
    CallArgNotSubtype,
    CalleeIllTyped,
    CyclicCallGraph,
    InvalidDerivation,
    MonomorphismViolation,
    UnboundVariable,
    UndeclaredSymbol,
    UnifyTypeMismatch,
    UnsatisfiableConstraints,
)
from trilog.normalizer import normalize
from trilog.parser import parse_program, parse_type
from trilog.typechecker import (
    check_clause,
    check_goal,
    check_program,
    check_term,
    reconstruct_branch_context,
    validate_derivation,
)
from trilog.types import BOOL_TYPE, TBase, DeclTable, canon

LIST = ":- type list(A) = [] + [A|list(A)].\n"
APPEND = LIST + "append([], L, L).\nappend([H|T], L, [H|R]) :- append(T, L, R).\n"


def check(src):
    return check_program(parse_program(src))


def types_of(src):
    r = check(src)
    return {p: (r.show_type(p) if res.ok else type(res.error).__name__) for p, res in r.predicates.items()}


def test_int_or_atom_and_its_derivation():
    r = check("p(X) :- X = 1 ; X = a.")
    assert r.show_type("p") == "int + atom -> bool"
    d = r.predicates["p"].derivation
    assert {"VAR", "CST", "UNF", "CON", "CLS"} <= d.rules()
    assert d.rule == "CLS"
    validate_derivation(d, r.program, r.decls, r.schemes())


def test_append():
    r = check(APPEND)
    assert r.show_type("append") == "list(A) * list(A) * list(A) -> bool"
    assert r.predicates["append"].derivation.rule == "RCLS"
    validate_derivation(r.predicates["append"].derivation, r.program, r.decls, r.schemes())


def test_append_query_with_list_and_dummy_types():
    rejected = check(APPEND + "?- append([], 1, 1).")
    assert isinstance(rejected.queries[0].error, CallArgNotSubtype)
    assert not rejected.ok and rejected.predicates_ok
    dummy = ":- type dummy(A) = 1 + [] + [A|dummy(A)].\n"
    accepted = check(dummy + "append([], L, L).\nappend([H|T], L, [H|R]) :- append(T, L, R).\n"
                     "?- append([], 1, 1).")
    assert accepted.ok
    assert accepted.show_type("append") == "dummy(A) * dummy(A) * dummy(A) -> bool"


def test_examples():
    got = types_of(
        ":- type nat = z + s(nat).\n"
        "add(z, X, X).\nadd(s(X), Y, s(Z)) :- add(X, Y, Z).\n"
        "id(X, X).\n"
        "one(X) :- X = 1, X = 2.\n"
        "q(X) :- X = 1, X = a.\n"
        "useid(X) :- id(X, 1).\n"
    )
    assert got == {
        "add": "nat * nat * nat -> bool",
        "id": "A * A -> bool",
        "one": "int -> bool",
        "q": "UnsatisfiableConstraints",
        "useid": "int -> bool",
    }


def test_unification_across_domains_is_rejected():
    r = check("p(X) :- X = 1 ; X = a.\nr(A, B) :- p(A), p(B), A = B.")
    assert r.predicates["p"].ok
    assert isinstance(r.predicates["r"].error, UnifyTypeMismatch)


def test_errors():
    assert isinstance(check("p(X) :- X = f(1).").predicates["p"].error, UndeclaredSymbol)
    r = check("p(X) :- q(X).\nq(X) :- p(X).")
    assert all(isinstance(res.error, CyclicCallGraph) for res in r.predicates.values())
    r = check("q(X) :- X = 1, X = a.\np(X) :- q(X).")
    assert isinstance(r.predicates["p"].error, CalleeIllTyped)
    r = check(LIST + "p(X) :- X = 1.\np(X) :- X = [], p([X]).")
    assert not r.predicates["p"].ok


def test_polymorphic_recursion_is_rejected():
    r = check(LIST + "f(X) :- X = 1.\nf(X) :- X = [Y|T], f([X]).")
    assert isinstance(r.predicates["f"].error, (MonomorphismViolation, UnsatisfiableConstraints,
                                                 UnifyTypeMismatch))


def test_error_carries_predicate_and_position():
    r = check("q(X) :-\n  X = 1, X = a.")
    err = r.predicates["q"].error
    assert err.predicate == "q" and err.span is not None


def test_rule_level_checking():
    decls = DeclTable(parse_program(LIST).type_decls)
    ctx = {"X": TBase("int"), "L": parse_type("[int|list(int)]")}
    assert check_term(ctx, Var("X"), decls) == TBase("int")
    assert check_term(ctx, Const("1"), decls) == TBase("int")
    d = check_goal(ctx, Unify(Var("X"), Const("1")), None, decls, {})
    assert d.rule == "UNF" and d.type == BOOL_TYPE
    with pytest.raises(UnifyTypeMismatch):
        check_goal(ctx, Unify(Var("X"), Const("a")), None, decls, {})
    with pytest.raises(UnboundVariable):
        check_goal(ctx, Unify(Var("Y"), Const("1")), None, decls, {})


def test_given_branch_contexts():
    p = normalize(parse_program("p(X) :- X = 1 ; X = a."))
    c = p.definition("p")
    d = check_clause(c, [{"_A1": TBase("int")}, {"_A1": TBase("atom")}], p, DeclTable(), {})
    assert d.type == BOOL_TYPE
    assert canon(d.context["_A1"]) == canon(parse_type("int + atom"))
    with pytest.raises(UnifyTypeMismatch):
        check_clause(c, [{"_A1": TBase("int")}, {"_A1": TBase("int")}], p, DeclTable(), {})


def test_reconstruction():
    p = normalize(parse_program("p(X, Y) :- X = 1, Y = [].\n" + LIST))
    c = p.definition("p")
    ctx = reconstruct_branch_context(c.body[0], ["_A1", "_A2"], p, DeclTable(p.type_decls))
    assert ctx["_A1"] == TBase("int")


def test_validator_rejects_tampering():
    r = check("p(X) :- X = 1 ; X = a.")
    d = r.predicates["p"].derivation
    unf = next(n for n in d.nodes() if n.rule == "UNF")
    unf.premises[0].type = TBase("atom")
    with pytest.raises(InvalidDerivation):
        validate_derivation(d, r.program, r.decls, r.schemes())


def test_render_and_json():
    r = check("p(X) :- X = 1 ; X = a.")
    d = r.predicates["p"].derivation
    text = d.render(r.decls)
    assert text.splitlines()[0].startswith("CLS")
    assert d.to_json(r.decls)["rule"] == "CLS"
