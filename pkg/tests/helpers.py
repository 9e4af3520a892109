"""Shared builders for the test suite: random types and a small universe."""

from __future__ import annotations

import random
from typing import List, Tuple

from hypothesis import strategies as st

from trilog.parser import parse_program
from trilog.soundness import UniverseConfig, build_interpretation
from trilog.types import TBase, TConst, TMu, TSum, TVar, DeclTable, SimpleType, mk_sum

SIX_VALUES_SOURCE = """
:- type color = red + green.
k(X) :- X = 0 ; X = 1 ; X = a ; X = b ; X = red ; X = green.
"""

LEAVES: List[SimpleType] = [
    TBase("int"), TBase("atom"),
    TConst("0"), TConst("1"), TConst("a"), TConst("b"), TConst("red"), TConst("green"),
]
VARS = [TVar("A"), TVar("B")]


def six_value_universe():
    """int = {0, 1}, atom = {a, b}, color = {red, green}."""
    p = parse_program(SIX_VALUES_SOURCE)
    decls = DeclTable(p.type_decls)
    interp, universe = build_interpretation(p, decls, UniverseConfig())
    return p, decls, interp, universe


def _leaf(rng: random.Random, ground: bool) -> SimpleType:
    pool = LEAVES if ground else LEAVES + VARS
    return rng.choice(pool)


def random_type(rng: random.Random, ground: bool = True, depth: int = 2) -> SimpleType:
    roll = rng.random()
    if depth <= 0 or roll < 0.4:
        return _leaf(rng, ground)
    if roll < 0.85:
        return mk_sum([random_type(rng, ground, depth - 1) for _ in range(rng.randint(2, 3))])
    return TMu("x", TSum((random_type(rng, ground, depth - 1), TVar("x"))))


def random_subtype_pair(rng: random.Random) -> Tuple[SimpleType, SimpleType]:
    """A candidate pair biased toward ``a <= b`` (the caller still decides)."""
    a = random_type(rng, ground=rng.random() < 0.7)
    roll = rng.random()
    if roll < 0.4:
        b = mk_sum([a] + [random_type(rng) for _ in range(rng.randint(1, 2))])
    elif roll < 0.55:
        b = mk_sum([a, rng.choice(VARS)])
    elif roll < 0.7:
        b = rng.choice(VARS)
    else:
        b = random_type(rng, ground=rng.random() < 0.7)
    return a, b


def types(ground: bool = False):
    """Hypothesis strategy over the same type shapes."""
    leaves = st.sampled_from(LEAVES if ground else LEAVES + VARS)
    return st.recursive(
        leaves,
        lambda inner: st.one_of(
            st.lists(inner, min_size=2, max_size=3).map(mk_sum),
            inner.map(lambda t: TMu("x", TSum((t, TVar("x"))))),
        ),
        max_leaves=6,
    )
