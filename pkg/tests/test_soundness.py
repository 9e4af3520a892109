import pathlib

import pytest

from trilog.ast import Program, pretty
from trilog.errors import SoundnessViolation, UnsatisfiableConstraints
from trilog.normalizer import is_normal, normalize
from trilog.parser import parse_program, parse_type
from trilog.semantics import WRONG_VALUE, F, T, W
from trilog.soundness import (
    SizeParams,
    UniverseConfig,
    build_interpretation,
    context_holds,
    evaluate_program,
    generate_program,
    generator_depth,
    has_wrong_state,
    constant_type_failures,
    semantic_typing_check,
    verify_soundness,
    value_has_type,
)
from trilog.typechecker import check_program
from trilog.types import BOOL_TYPE, TBase, DeclTable

FIXTURES = pathlib.Path(__file__).parent / "fixtures"
PROGRAMS = pathlib.Path(__file__).parent.parent / "programs"


def interp_of(src, **config):
    p = normalize(parse_program(src))
    interp, u = build_interpretation(p, config=UniverseConfig(**config))
    return p, interp, u


def test_value_has_type():
    _, interp, u = interp_of(":- type list(A) = [] + [A|list(A)].\nk(X) :- X = 1 ; X = [].")
    assert value_has_type(interp.constant("1"), TBase("int"), interp, u)
    assert not value_has_type(WRONG_VALUE, TBase("int"), interp, u)
    assert value_has_type(interp.constant("[]"), parse_type("mu a. [] + [int|a]"), interp, u)


def test_context_holds():
    p, interp, u = interp_of("k(X) :- X = 1 ; X = a.")
    one, a = interp.constant("1"), interp.constant("a")
    assert context_holds({"X": TBase("int")}, interp, {"X": one}, u)
    assert not context_holds({"X": TBase("int")}, interp, {"X": a}, u)
    assert context_holds({}, interp, {"X": a}, u)


def test_partitions():
    _, interp, u = interp_of("k(X) :- X = 1 ; X = a.")
    assert sorted(u.domains) == ["atom", "int"]
    _, interp, u = interp_of("k(X) :- X = 1 ; X = a.", partition="herbrand")
    assert sorted(u.domains) == ["H"]
    _, interp, u = interp_of("k(X) :- X = 1 ; X = a.", partition="singleton")
    assert len(u.domains) == 2 and u.size() == 2


def test_explicit_domains():
    cfg = UniverseConfig(domains={"int": ["1", "2", "3"], "atom": ["a"]})
    p = normalize(parse_program("k(X) :- X = 1 ; X = a."))
    interp, u = build_interpretation(p, config=cfg)
    assert u.size() == 4
    assert UniverseConfig.from_json('{"depth": 2, "partition": "herbrand"}').depth == 2
    with pytest.raises(ValueError):
        UniverseConfig.from_json('{"colour": 1}')


def test_no_predicates():
    interp, u = build_interpretation(Program())
    assert not interp.predicates and u.size() == 0


def test_predicate_tables_follow_types():
    p, interp, u = interp_of("p(X) :- X = 1.\nk(X) :- X = a.")
    assert interp.predicate("p").apply([interp.constant("1")]) is T
    assert interp.predicate("p").apply([interp.constant("a")]) is W


def test_constants_inhabit_types_on_fixtures():
    for path in sorted(PROGRAMS.glob("*.pl")):
        p = normalize(parse_program(path.read_text()))
        decls = DeclTable(p.type_decls)
        interp, u = build_interpretation(p, decls, UniverseConfig(depth=2))
        assert constant_type_failures(p, decls, interp, u) == [], path.name


def test_semantic_typing_split():
    p, interp, u = interp_of("p(X) :- X = 1 ; X = a.")
    c = p.definition("p")
    ctx = {"_A1": parse_type("int + atom")}
    r = semantic_typing_check(ctx, c, BOOL_TYPE, p, interp, u)
    assert r.holds and len(r.split) == 2
    assert {str(g["_A1"]) for g in r.split} == {"int", "atom"}


def test_semantic_typing_counterexample():
    p, interp, u = interp_of("q(X) :- X = 1, X = a.")
    r = semantic_typing_check({"_A1": TBase("int")}, p.definition("q"), BOOL_TYPE, p, interp, u)
    assert not r.holds
    assert r.counterexample["state"] == {"_A1": "1"}


def test_semantic_typing_vacuous():
    p, interp, u = interp_of(":- type nat = z + s(nat).\nq(X) :- X = 1, X = a.\nk(z).")
    r = semantic_typing_check({"_A1": parse_type("mu x. s(x)")}, p.definition("q"), BOOL_TYPE, p, interp, u)
    assert r.holds and r.vacuous


def test_semantic_typing_terms():
    p, interp, u = interp_of("k(X) :- X = 1 ; X = a.")
    from trilog.ast import Unify, Var, Const

    assert semantic_typing_check({"X": TBase("int")}, Var("X"), TBase("int"), p, interp, u).holds
    assert not semantic_typing_check({"X": parse_type("int + atom")}, Var("X"), TBase("int"), p, interp, u).holds
    assert not semantic_typing_check({"X": TBase("int")}, Unify(Var("X"), Const("a")), BOOL_TYPE, p, interp, u).holds


def test_examples_one_and_two():
    sums, _ = evaluate_program(parse_program("p(X) :- X = 1, X = 2."))
    assert sums[0].values() <= {T, F} and sums[0].count_wrong == 0
    sums, u = evaluate_program(parse_program("p(X) :- X = 1, X = 2."), UniverseConfig(partition="singleton"))
    assert sums[0].values() == {W}
    sums, _ = evaluate_program(parse_program("q(X) :- X = 1, X = a."))
    assert sums[0].values() == {W}
    sums, _ = evaluate_program(parse_program("q(X) :- X = 1, X = a."), UniverseConfig(partition="herbrand"))
    assert sums[0].count_wrong == 0


def test_verify_fixtures():
    for name in ("add.pl", "append.pl", "colors.pl", "contradiction.pl", "int_or_atom.pl"):
        p = parse_program((PROGRAMS / name).read_text())
        rep = verify_soundness(p, config=UniverseConfig(depth=2))
        assert rep.ok and rep.wrong_count == 0, name


def test_verify_rejects_ill_typed():
    with pytest.raises(UnsatisfiableConstraints):
        verify_soundness(parse_program("q(X) :- X = 1, X = a."))


def test_verify_reports_truncation_separately():
    rep = verify_soundness(parse_program((PROGRAMS / "add.pl").read_text()), config=UniverseConfig(depth=3))
    (add,) = rep.predicates
    assert add.status == "truncated" and add.wrong_count == 0 and add.truncation_count > 0
    assert set(add.to_json()) >= {"predicate", "status", "states_checked", "wrong_count",
                                  "truncation_count", "witness_split"}


def test_strict_mode_raises_on_a_planted_violation():
    # Hand the harness a program whose checked contexts are deliberately wrong.
    p = parse_program("p(X) :- X = 1.\nk(a).")
    check = check_program(p)
    check.predicates["p"].branch_contexts = [{"_A1": parse_type("int + atom")}]
    with pytest.raises(SoundnessViolation) as info:
        verify_soundness(p, check=check, strict=True)
    assert info.value.report.predicates[0].counterexample is not None


def test_generator_golden():
    assert pretty(generate_program(0)) == (FIXTURES / "generated_seed0.pl").read_text()


def test_generator_basics():
    assert generate_program(5) == generate_program(5)
    assert generate_program(1, SizeParams.zero()) == Program()
    for seed in range(50):
        p = generate_program(seed)
        assert is_normal(p)
        for c in p.clauses:
            assert c.arity <= 3 and len(c.body) <= 3


def test_generator_health():
    ok = sum(check_program(generate_program(seed)).ok for seed in range(1000))
    assert ok >= 300


def test_negative_programs_go_wrong():
    rejected = [s for s in range(60) if not check_program(generate_program(s)).ok]
    assert len(rejected) >= 20
    for s in rejected[:20]:
        p = generate_program(s)
        assert has_wrong_state(p, UniverseConfig(depth=generator_depth(p))), s
