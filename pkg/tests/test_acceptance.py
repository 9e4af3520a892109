"""The eleven acceptance criteria, one test each.

Each test records a PASS/FAIL line; ``conftest.py`` prints them at the end of
the run, and running this file directly prints them too.
"""

from __future__ import annotations

import functools
import itertools
import pathlib
import random
import sys
import time

import pytest

sys.path.insert(0, str(pathlib.Path(__file__).parent))

from helpers import random_subtype_pair, random_type, six_value_universe  # noqa: E402
from trilog.normalizer import alpha_equivalent_programs, is_normal, normalize  # noqa: E402
from trilog.parser import parse_program, parse_type  # noqa: E402
from trilog.semantics import AND_TABLE, NOT_TABLE, OR_TABLE, Base, F, T, Tree, W, tv_implies  # noqa: E402
from trilog.soundness import (  # noqa: E402
    UniverseConfig,
    build_interpretation,
    evaluate_program,
    generate_program,
    generator_depth,
    has_wrong_state,
    constant_type_failures,
    verify_soundness,
)
from trilog.subtyping import is_subtype  # noqa: E402
from trilog.typechecker import check_program, validate_derivation  # noqa: E402
from trilog.types import DeclTable, mu_iterates, tsem  # noqa: E402

HERE = pathlib.Path(__file__).parent
PROGRAMS = HERE.parent / "programs"
RESULTS: dict = {}


def criterion(number: int, title: str):
    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            start = time.perf_counter()
            try:
                detail = fn(*args, **kwargs)
            except BaseException as exc:
                RESULTS[number] = (False, title, f"{type(exc).__name__}: {exc}".splitlines()[0][:160])
                raise
            elapsed = time.perf_counter() - start
            RESULTS[number] = (True, title, f"{detail or 'ok'} ({elapsed:.2f} s)")

        return run

    return wrap


def summary_lines():
    lines = []
    for n in range(1, 12):
        if n in RESULTS:
            ok, title, detail = RESULTS[n]
            lines.append(f"criterion {n:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
        else:
            lines.append(f"criterion {n:>2} NOT RUN")
    return lines


# 1 ------------------------------------------------------------------------------------------

# transcribed by hand: rows are the left operand, columns the right, in the order true, false, wrong
EXPECTED_AND = [[T, F, W], [F, F, W], [W, W, W]]
EXPECTED_OR = [[T, T, W], [T, F, W], [W, W, W]]
EXPECTED_NOT = [F, T, W]
EXPECTED_IMPLIES = [[T, F, W], [T, T, W], [W, W, W]]


@criterion(1, "truth tables")
def test_c01_truth_tables():
    order = (T, F, W)

    def compare():
        bad = 0
        for (i, a), (j, b) in itertools.product(enumerate(order), repeat=2):
            bad += AND_TABLE[a, b] is not EXPECTED_AND[i][j]
            bad += OR_TABLE[a, b] is not EXPECTED_OR[i][j]
            bad += tv_implies(a, b) is not EXPECTED_IMPLIES[i][j]
        for i, a in enumerate(order):
            bad += NOT_TABLE[a] is not EXPECTED_NOT[i]
        return bad

    assert compare() == 0
    best = min(_timed(compare) for _ in range(20))
    assert best < 1e-3, best
    return f"30 entries match, best run {best * 1e6:.0f} us"


def _timed(fn):
    start = time.perf_counter()
    fn()
    return time.perf_counter() - start


# 2, 3 ---------------------------------------------------------------------------------------


@criterion(2, "contradiction over one int domain")
def test_c02_example_one():
    p = parse_program("p(X) :- X = 1, X = 2.")
    (typed,), _ = evaluate_program(p, UniverseConfig(partition="typed"))
    assert typed.values() <= {T, F} and typed.count_wrong == 0
    (single,), _ = evaluate_program(p, UniverseConfig(partition="singleton"))
    assert single.values() == {W}
    return (f"typed: {typed.count_true} true, {typed.count_false} false, 0 wrong; "
            f"singleton: {single.count_wrong} of {single.count_wrong} wrong")


@criterion(3, "int/atom mix")
def test_c03_example_two():
    p = parse_program("q(X) :- X = 1, X = a.")
    (typed,), _ = evaluate_program(p, UniverseConfig(partition="typed"))
    assert typed.values() == {W}
    (herbrand,), _ = evaluate_program(p, UniverseConfig(partition="herbrand"))
    assert herbrand.count_wrong == 0
    return f"typed: all {typed.count_wrong} wrong; herbrand: 0 wrong"


# 4 ------------------------------------------------------------------------------------------


@criterion(4, "normalization of add/3")
def test_c04_normalization():
    raw = parse_program("add(0, X, X).\nadd(s(X), Y, s(Z)) :- add(X, Y, Z).")
    expected = parse_program(
        "add(P, Q, R) :- ( P = 0, Q = U, R = U ) ; "
        "( P = s(V), Q = W, R = s(K), F1 = V, F2 = W, F3 = K, add(F1, F2, F3) )."
    )
    got = normalize(raw)
    assert is_normal(got)
    assert alpha_equivalent_programs(got, expected)
    return "alpha-equivalent to the expected form"


# 5 ------------------------------------------------------------------------------------------


@criterion(5, "list type fixpoint")
def test_c05_list_fixpoint():
    p = parse_program(":- type list(A) = [] + [A|list(A)].\nk(X) :- X = 1 ; X = 2.")
    interp, u = build_interpretation(p, config=UniverseConfig(depth=2))
    assert len(u.domains["int"].members) == 2
    t = parse_type("mu a. [] + [int|a]")
    got = tsem(t, interp, u)

    # oracle: lists of at most two elements drawn from the int domain, built directly
    ints = sorted(u.domains["int"].members, key=lambda v: v.token)
    oracle = set()
    for n in range(3):
        for items in itertools.product(ints, repeat=n):
            v = Tree("list", "[]")
            for x in reversed(items):
                v = Tree("list", "[|]", (x, v))
            oracle.add(v)
    assert len(oracle) == 1 + 2 + 4
    assert got == oracle
    chain = mu_iterates(t, interp, u)
    assert chain[0] < chain[1] < chain[2] == chain[3]
    return f"{len(got)} members; chain sizes {[len(c) for c in chain]}"


# 6 ------------------------------------------------------------------------------------------


@criterion(6, "typing of p(X) :- X=1 ; X=a")
def test_c06_typing_regression():
    r = check_program(parse_program("p(X) :- X = 1 ; X = a."))
    assert r.show_type("p") == "int + atom -> bool"
    d = r.predicates["p"].derivation
    assert {"VAR", "CST", "UNF", "CLS"} <= d.rules()
    validate_derivation(d, r.program, r.decls, r.schemes())
    return "int + atom -> bool, derivation uses " + ", ".join(sorted(d.rules()))


# 7 ------------------------------------------------------------------------------------------


@criterion(7, "append with list and dummy types")
def test_c07_append():
    body = "append([], L, L).\nappend([H|T], L, [H|R]) :- append(T, L, R).\n?- append([], 1, 1).\n"
    listed = check_program(parse_program(":- type list(A) = [] + [A|list(A)].\n" + body))
    assert listed.show_type("append") == "list(A) * list(A) * list(A) -> bool"
    assert not listed.queries[0].ok
    dummy = check_program(parse_program(":- type dummy(A) = 1 + [] + [A|dummy(A)].\n" + body))
    assert dummy.queries[0].ok
    return f"query rejected ({listed.queries[0].error.kind}) with list, accepted with dummy"


# 8 ------------------------------------------------------------------------------------------


@criterion(8, "subtyping suite")
def test_c08_subtyping():
    start = time.perf_counter()
    rng = random.Random(2024)
    for _ in range(100):
        t = random_type(rng, ground=rng.random() < 0.5)
        assert is_subtype(t, t)
    assert is_subtype(parse_type("int"), parse_type("int + atom"))
    assert is_subtype(parse_type("int + atom -> bool"), parse_type("int -> bool"))
    _, _, interp, u = six_value_universe()
    assert u.size() == 6
    pairs = 0
    while pairs < 100:
        a, b = random_subtype_pair(rng)
        if is_subtype(a, b):
            pairs += 1
            assert tsem(a, interp, u) <= tsem(b, interp, u), (a, b)
    elapsed = time.perf_counter() - start
    assert elapsed < 10
    return "100 reflexive types, 100 subtype pairs contained"


# 9 ------------------------------------------------------------------------------------------


def _basic_values(u):
    return sum(1 for v in u.values() if isinstance(v, Base))


@criterion(9, "soundness on generated programs")
def test_c09_generated_soundness():
    start = time.perf_counter()
    accepted = 0
    for seed in range(200):
        p = generate_program(seed)
        r = check_program(p)
        if not r.ok:
            continue
        accepted += 1
        assert max((c.arity for c in r.program.clauses), default=0) <= 3
        config = UniverseConfig(depth=generator_depth(p))
        rep = verify_soundness(p, config=config, check=r)
        _, u = build_interpretation(r.program, r.decls, config, r)
        assert _basic_values(u) <= 6, seed
        assert rep.wrong_count == 0, (seed, [x.to_json() for x in rep.predicates])
    elapsed = time.perf_counter() - start
    assert elapsed < 300
    return f"{accepted} of 200 programs well-typed, 0 wrong outcomes"


# 10 -----------------------------------------------------------------------------------------


@criterion(10, "rejected programs go wrong")
def test_c10_negative_control():
    start = time.perf_counter()
    rejected = wrong = 0
    for seed in range(200):
        p = generate_program(seed)
        if check_program(p).ok:
            continue
        rejected += 1
        wrong += has_wrong_state(p, UniverseConfig(depth=generator_depth(p)))
    elapsed = time.perf_counter() - start
    assert rejected >= 20
    assert wrong >= 0.5 * rejected
    assert elapsed < 120
    return f"{wrong} of {rejected} rejected programs have a wrong state"


# 11 -----------------------------------------------------------------------------------------


@criterion(11, "constants inhabit their declared types")
def test_c11_constant_types():
    fixtures = sorted(PROGRAMS.glob("*.pl")) + sorted((HERE / "fixtures").glob("*.pl"))
    assert fixtures
    constants = 0
    for path in fixtures:
        p = normalize(parse_program(path.read_text()))
        decls = DeclTable(p.type_decls)
        interp, u = build_interpretation(p, decls, UniverseConfig(depth=2))
        assert constant_type_failures(p, decls, interp, u) == [], path.name
        constants += len(interp.constants)
    return f"{constants} constants over {len(fixtures)} programs"


if __name__ == "__main__":
    code = pytest.main([__file__, "-q"])
    print("\n".join(summary_lines()))
    sys.exit(code)
