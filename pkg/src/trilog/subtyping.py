"""Decision procedure for the subtype relation.

The rules (reflexivity, instance, right union, left union, contravariance on
predicate types) overlap, so the algorithm tries them in a fixed order:
syntactic equality, instance matching, sum decomposition, then mu unfolding
under a coinductive assumption set.  Type applications have no depth
subtyping: their arguments must be equivalent.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import FrozenSet, List, Optional, Tuple, Union

from trilog.semantics import (
    Interpretation,
    PredFunc,
    Universe,
    domain_of,
    show_value,
    value_key,
)
from trilog.types import (
    PredicateType,
    SimpleType,
    TApp,
    TMu,
    TSum,
    canon,
    free_vars,
    match_type,
    normalize_sum,
    psem_member,
    rename_apart,
    show_type,
    tsem,
    unfold,
)

AnyType = Union[SimpleType, PredicateType]
_Pair = Tuple[SimpleType, SimpleType]


Lines = Optional[List[str]]


def _indent(lines: List[str]) -> List[str]:
    return ["  " + line for line in lines]


class _Search:
    """Returns the justification lines of a successful derivation, or None."""

    def __init__(self):
        self.budget = 20_000

    def sub(self, a: SimpleType, b: SimpleType, assume: FrozenSet[_Pair],
            pending: FrozenSet[_Pair] = frozenset()) -> Lines:
        """``assume`` holds pairs met again under a constructor, which may be
        used coinductively; ``pending`` holds pairs unfolded since the last
        constructor, whose reappearance is an unproductive cycle."""
        self.budget -= 1
        if self.budget < 0:
            return None
        rel = f"{show_type(a)} <= {show_type(b)}"
        if a == b:
            return [f"reflexivity: {rel}"]
        if (a, b) in assume:
            return [f"assumption: {rel}"]
        bind = free_vars(b)
        if bind:
            phi = match_type(b, a, bind)
            if phi is not None:
                shown = ", ".join(f"{k} := {show_type(v)}" for k, v in sorted(phi.items()))
                return [f"instance [{shown}]: {rel}"]
        if isinstance(b, TSum):
            if isinstance(a, TSum):
                found = self._each(a.items, lambda x: self._some(x, b.items, assume, pending))
                if found is not None:
                    return [f"left/right union: {rel}"] + _indent(found)
            else:
                found = self._some(a, b.items, assume, pending)
                if found is not None:
                    return [f"right union: {rel}"] + _indent(found)
        if isinstance(a, TSum) and not isinstance(b, TSum):
            found = self._each(a.items, lambda x: self.sub(x, b, assume, pending))
            if found is not None:
                return [f"left union: {rel}"] + _indent(found)
            if not isinstance(b, TMu):
                return None
        if isinstance(a, TMu) or isinstance(b, TMu):
            if (a, b) in pending:
                return None
            found = self.sub(_canon_unfold(a), _canon_unfold(b), assume, pending | {(a, b)})
            return None if found is None else [f"unfold: {rel}"] + _indent(found)
        if isinstance(a, TApp) and isinstance(b, TApp):
            if a.functor != b.functor or len(a.args) != len(b.args):
                return None
            lines: List[str] = []
            guarded = assume | pending
            for x, y in zip(a.args, b.args):
                there, back = self.sub(x, y, guarded), self.sub(y, x, guarded)
                if there is None or back is None:
                    return None
                lines += there + back
            return [f"equivalent arguments: {rel}"] + _indent(lines)
        return None

    def _some(self, a: SimpleType, options, assume, pending) -> Lines:
        for y in options:
            found = self.sub(a, y, assume, pending)
            if found is not None:
                return found
        return None

    def _each(self, items, check) -> Lines:
        lines: List[str] = []
        for x in items:
            found = check(x)
            if found is None:
                return None
            lines += found
        return lines


def _canon_unfold(t: SimpleType) -> SimpleType:
    return canon(unfold(t)) if isinstance(t, TMu) else t


def _prepare(a: SimpleType, b: SimpleType) -> Tuple[SimpleType, SimpleType]:
    a = canon(normalize_sum(a))
    b, _ = rename_apart(canon(normalize_sum(b)), free_vars(a))
    return a, canon(b)


def subtype_trace(a: AnyType, b: AnyType, contravariant: bool = True) -> Tuple[bool, List[str]]:
    """Decide ``a <= b`` and return the rule trace that justified it."""
    trace: List[str] = []
    if isinstance(a, PredicateType) or isinstance(b, PredicateType):
        if not (isinstance(a, PredicateType) and isinstance(b, PredicateType)):
            return False, ["predicate and simple types are unrelated"]
        if len(a.args) != len(b.args):
            return False, ["arity differs"]
        for i, (x, y) in enumerate(zip(a.args, b.args)):
            lo, hi = (y, x) if contravariant else (x, y)
            ok, sub_trace = subtype_trace(lo, hi)
            trace.append(f"contravariance, argument {i + 1}: {show_type(lo)} <= {show_type(hi)}")
            trace.extend("  " + line for line in sub_trace)
            if not ok:
                return False, trace
        return True, trace
    x, y = _prepare(a, b)
    found = _Search().sub(x, y, frozenset())
    return found is not None, found or []


def is_subtype(a: AnyType, b: AnyType) -> bool:
    return subtype_trace(a, b)[0]


def types_equivalent(a: SimpleType, b: SimpleType) -> bool:
    return canon(a) == canon(b) or (is_subtype(a, b) and is_subtype(b, a))


# --- executable soundness check ----------------------------------------------------


@dataclass
class SubtypeReport:
    subtype: bool
    holds: bool
    counterexample: Optional[str] = None
    details: List[str] = field(default_factory=list)


def _pred_witness(pt: PredicateType, interp: Interpretation, universe: Universe) -> PredFunc:
    """A predicate defined exactly on the argument domains of ``pt``."""
    sig = []
    for t in pt.args:
        sig.append(frozenset(domain_of(v) for v in tsem(t, interp, universe)))
    return PredFunc("witness", tuple(sig))


def check_subtype_soundness(a: AnyType, b: AnyType, interp: Interpretation, universe: Universe,
                            contravariant: bool = True) -> SubtypeReport:
    """If ``a <= b`` is derivable, confirm the semantic containment it promises.

    Term types: tsem(a) must be a subset of tsem(b).  Predicate types: every
    predicate in P[a] must be in P[b]; checked with the argument-set
    containment and with a witness predicate defined only on a's domains.
    """
    ok = subtype_trace(a, b, contravariant)[0]
    if not ok:
        return SubtypeReport(False, True)
    if isinstance(a, PredicateType) and isinstance(b, PredicateType):
        witness = _pred_witness(a, interp, universe)
        in_a = psem_member(witness, a, interp, universe)
        in_b = psem_member(witness, b, interp, universe)
        if in_a and not in_b:
            for args in itertools.product(*(sorted(tsem(t, interp, universe), key=value_key) for t in b.args)):
                if not witness.accepts(args):
                    shown = ", ".join(show_value(v) for v in args)
                    return SubtypeReport(True, False, f"witness predicate is wrong on ({shown})")
            return SubtypeReport(True, False, "witness predicate escapes the supertype")
        return SubtypeReport(True, True)
    sa = tsem(a, interp, universe)
    sb = tsem(b, interp, universe)
    extra = sorted(sa - sb, key=value_key)
    if extra:
        return SubtypeReport(True, False, show_value(extra[0]))
    return SubtypeReport(True, True)
