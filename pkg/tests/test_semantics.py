import itertools

import pytest
from hypothesis import given, strategies as st

from trilog.ast import Clause, Compound, Const, Unify, Var
from trilog.errors import MissingSymbol, UniverseTooLarge
from trilog.normalizer import normalize
from trilog.parser import parse_program
from trilog.semantics import (
    AND_TABLE,
    OR_TABLE,
    F,
    T,
    W,
    WRONG_VALUE,
    Base,
    BoolV,
    Domain,
    EvalLog,
    Func,
    Interpretation,
    PredFunc,
    Tree,
    Universe,
    enumerate_state_lists,
    eval_clause,
    eval_term,
    eval_unify,
    fold_and,
    fold_or,
    least_model,
    states_over,
    tv_and,
    tv_implies,
    tv_not,
    tv_or,
)

VALUES = (T, F, W)
tvs = st.sampled_from(VALUES)


def classical(v):
    return {T: True, F: False}[v]


def test_classical_fragment():
    for a, b in itertools.product((T, F), repeat=2):
        assert classical(tv_and(a, b)) == (classical(a) and classical(b))
        assert classical(tv_or(a, b)) == (classical(a) or classical(b))
    assert tv_not(T) is F and tv_not(F) is T


@given(tvs)
def test_wrong_absorbs(a):
    assert tv_and(a, W) is W and tv_and(W, a) is W
    assert tv_or(a, W) is W and tv_or(W, a) is W
    assert tv_implies(a, W) is W and tv_implies(W, a) is W


def test_algebraic_laws_exhaustive():
    for op in (tv_and, tv_or):
        for a, b, c in itertools.product(VALUES, repeat=3):
            assert op(a, b) is op(b, a)
            assert op(op(a, b), c) is op(a, op(b, c))
        for a in VALUES:
            assert op(a, a) is a


def test_implication_is_not_or():
    for a, b in itertools.product(VALUES, repeat=2):
        assert tv_implies(a, b) is tv_or(tv_not(a), b)


def test_tables_are_total():
    assert set(AND_TABLE) == set(itertools.product(VALUES, repeat=2)) == set(OR_TABLE)


def test_folds():
    assert fold_and([]) is T and fold_or([]) is F
    assert fold_and([T, F, W]) is W
    assert fold_or([F, T]) is T


# --- a small interpretation -------------------------------------------------------

I1, I2, A = Base("int", "1"), Base("int", "2"), Base("atom", "a")
NIL = Tree("L", "nil")


def small():
    cons_table = {(x, NIL): Tree("L", "cons", (x, NIL)) for x in (I1, I2)}
    cons = Func("cons", (frozenset({"int"}), frozenset({"L"})), "L", cons_table, complete=False)
    interp = Interpretation(
        {"1": I1, "2": I2, "a": A, "nil": NIL},
        {("cons", 2): cons},
        {"p": PredFunc("p", (frozenset({"int"}),), frozenset({(I1,)}))},
    )
    domains = {
        "int": Domain("int", "basic", frozenset({I1, I2})),
        "atom": Domain("atom", "basic", frozenset({A})),
        "L": Domain("L", "tree", frozenset({NIL, *cons_table.values()})),
    }
    return interp, Universe(domains, 1, {"int": "int", "atom": "atom"})


def test_unify_three_cases():
    interp, _ = small()
    assert eval_unify(Const("1"), Const("1"), interp, {}) is T
    assert eval_unify(Const("1"), Const("2"), interp, {}) is F
    assert eval_unify(Const("1"), Const("a"), interp, {}) is W


def test_term_evaluation_and_wrong_propagation():
    interp, _ = small()
    t = Compound("cons", (Var("X"), Const("nil")))
    assert eval_term(t, interp, {"X": I1}) == Tree("L", "cons", (I1, NIL))
    assert eval_term(t, interp, {"X": A}) is WRONG_VALUE
    nested = Compound("cons", (Var("X"), Compound("cons", (Const("1"), Const("a")))))
    assert eval_term(nested, interp, {"X": I1}) is WRONG_VALUE


def test_truncation_is_logged():
    interp, _ = small()
    log = EvalLog()
    deep = Compound("cons", (Const("1"), Compound("cons", (Const("2"), Const("nil")))))
    assert eval_term(deep, interp, {}, log) is WRONG_VALUE
    assert log.truncations and log.truncations[0][0] == "cons"
    log.clear()
    eval_term(Compound("cons", (Const("a"), Const("nil"))), interp, {}, log)
    assert not log.truncations  # outside the signature: wrong, but not truncation


def test_missing_symbol():
    interp, _ = small()
    with pytest.raises(MissingSymbol):
        eval_term(Const("zzz"), interp, {})


@given(st.sampled_from(["1", "2", "a", "nil"]), st.sampled_from(["1", "2", "a", "nil"]))
def test_unify_symmetric(x, y):
    interp, _ = small()
    assert eval_unify(Const(x), Const(y), interp, {}) is eval_unify(Const(y), Const(x), interp, {})


def test_predicate_call_outside_signature_is_wrong():
    interp, _ = small()
    assert interp.predicate("p").apply([I1]) is T
    assert interp.predicate("p").apply([I2]) is F
    assert interp.predicate("p").apply([A]) is W


def test_clause_evaluates_head_per_state():
    interp, _ = small()
    c = Clause("p", (Var("X"),), ((Unify(Var("X"), Const("1")),), (Unify(Var("X"), Const("2")),)))
    assert eval_clause(c, interp, [{"X": I1}, {"X": I2}]) is F  # body true, head false under second state
    assert eval_clause(c, interp, [{"X": I1}, {"X": I1}]) is T


def test_state_enumeration_counts():
    _, u = small()
    c = Clause("p", (Var("X"),), ((Unify(Var("X"), Var("Y")),), ()))
    lists = list(enumerate_state_lists(c, u))
    n = u.size()
    assert len(lists) == (n * n) * n
    with pytest.raises(UniverseTooLarge):
        list(enumerate_state_lists(c, u, cap=10))
    assert len(list(states_over({"X": [I1, I2], "Y": [A]}))) == 2


def test_values_are_structural():
    assert Tree("L", "cons", (I1, NIL)) == Tree("L", "cons", (Base("int", "1"), Tree("L", "nil")))
    assert Base("int", "1") != Base("atom", "1")
    assert BoolV(True) != BoolV(False)


def test_universe_rejects_shared_values():
    with pytest.raises(ValueError):
        Universe({"a": Domain("a", "basic", frozenset({I1})), "b": Domain("b", "basic", frozenset({I1}))})


def test_least_model_is_monotone_and_computes_addition():
    from trilog.soundness import UniverseConfig, build_interpretation

    p = normalize(parse_program(":- type nat = z + s(nat).\nadd(z,X,X).\nadd(s(X),Y,s(Z)) :- add(X,Y,Z)."))
    interp, universe = build_interpretation(p, config=UniverseConfig(depth=3))
    _, history = least_model(p, interp, universe)
    for before, after in zip(history, history[1:]):
        assert before["add"] <= after["add"]

    def nat(v):
        return 0 if v.functor == "z" else 1 + nat(v.children[0])

    got = {tuple(nat(v) for v in t) for t in interp.predicates["add"].true_set}
    expected = {(a, b, a + b) for a in range(4) for b in range(4) if a + b <= 3}
    assert got == expected
    # the first sweep finds exactly the base case add(z, x, x)
    assert {tuple(nat(v) for v in t) for t in history[0]["add"]} == {(0, b, b) for b in range(4)}
