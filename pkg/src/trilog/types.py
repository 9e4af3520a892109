"""Type language: simple types, predicate types, schemes and their semantics.

Simple types are immutable trees.  Structural comparisons go through
:func:`canon`, which flattens and sorts sums and renames mu binders by nesting
depth, so ``mu a. ([] + [int|a])`` and ``mu b. ([int|b] + [])`` compare equal.

The set semantics (:func:`tsem`) is computed over a finite universe; mu types
are evaluated as the union of the Kleene chain from the empty set, which
stabilizes because tree domains are depth-bounded.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import (
    Dict,
    FrozenSet,
    Iterable,
    List,
    Mapping,
    Optional,
    Sequence,
    Set,
    Tuple,
    Union,
)

from trilog.ast import LIST_CONS, TypeDecl, is_integer_symbol, quote_atom
from trilog.errors import DeclarationError, MissingSymbol, UndeclaredSymbol
from trilog.semantics import (
    BoolV,
    Interpretation,
    PredFunc,
    Universe,
    Value,
    WRONG_VALUE,
    W,
    domain_of,
    max_states_default,
)
from trilog.errors import UniverseTooLarge

BASE_TYPES = ("int", "atom", "float")


@dataclass(frozen=True)
class TVar:
    name: str

    def __str__(self) -> str:
        return show_type(self)


@dataclass(frozen=True)
class TConst:
    symbol: str

    def __str__(self) -> str:
        return show_type(self)


@dataclass(frozen=True)
class TBase:
    name: str

    def __str__(self) -> str:
        return show_type(self)


@dataclass(frozen=True)
class TBool:
    def __str__(self) -> str:
        return "bool"


@dataclass(frozen=True)
class TSum:
    items: Tuple["SimpleType", ...]

    def __str__(self) -> str:
        return show_type(self)


@dataclass(frozen=True)
class TMu:
    var: str
    body: "SimpleType"

    def __str__(self) -> str:
        return show_type(self)


@dataclass(frozen=True)
class TApp:
    functor: str
    args: Tuple["SimpleType", ...]

    def __str__(self) -> str:
        return show_type(self)


SimpleType = Union[TVar, TConst, TBase, TBool, TSum, TMu, TApp]
BOOL_TYPE = TBool()


@dataclass(frozen=True)
class PredicateType:
    """``args[0] * ... * args[n-1] -> bool``."""

    args: Tuple[SimpleType, ...]

    def __str__(self) -> str:
        return show_predicate_type(self)


@dataclass(frozen=True)
class TypeScheme:
    quantified: FrozenSet[str]
    body: PredicateType

    def __str__(self) -> str:
        return show_predicate_type(self.body)


def mk_sum(items: Iterable[SimpleType]) -> SimpleType:
    items = tuple(items)
    if not items:
        raise ValueError("empty sum")
    if len(items) == 1:
        return items[0]
    return TSum(items)


# --- printing ---------------------------------------------------------------


def show_type(t: SimpleType, decls: Optional["DeclTable"] = None, _ctx: str = "top") -> str:
    if decls is not None and isinstance(t, (TMu, TSum, TApp, TConst)):
        alias = decls.alias(t)
        if alias is not None:
            return alias
    if isinstance(t, TVar):
        return t.name
    if isinstance(t, TConst):
        return quote_atom(t.symbol)
    if isinstance(t, TBase):
        return t.name
    if isinstance(t, TBool):
        return "bool"
    if isinstance(t, TSum):
        text = " + ".join(show_type(i, decls, "sum") for i in t.items)
        return f"({text})" if _ctx in ("sum", "product") else text
    if isinstance(t, TMu):
        body = show_type(t.body, decls, "mu")
        if isinstance(t.body, TSum):
            body = f"({body})"
        text = f"mu {t.var}. {body}"
        return f"({text})" if _ctx in ("sum", "product") else text
    if isinstance(t, TApp):
        if t.functor == LIST_CONS and len(t.args) == 2:
            return f"[{show_type(t.args[0], decls)}|{show_type(t.args[1], decls)}]"
        args = ", ".join(show_type(a, decls) for a in t.args)
        return f"{quote_atom(t.functor)}({args})"
    raise TypeError(f"not a simple type: {t!r}")


def show_predicate_type(pt: PredicateType, decls: Optional["DeclTable"] = None) -> str:
    if not pt.args:
        return "() -> bool"
    ctx = "product" if len(pt.args) > 1 else "top"
    return " * ".join(show_type(a, decls, ctx) for a in pt.args) + " -> bool"


# --- structure ----------------------------------------------------------------


def free_vars(t: SimpleType) -> Set[str]:
    if isinstance(t, TVar):
        return {t.name}
    if isinstance(t, TSum):
        return set().union(*(free_vars(i) for i in t.items))
    if isinstance(t, TApp):
        return set().union(set(), *(free_vars(a) for a in t.args))
    if isinstance(t, TMu):
        return free_vars(t.body) - {t.var}
    return set()


def free_vars_pt(pt: PredicateType) -> Set[str]:
    return set().union(set(), *(free_vars(a) for a in pt.args))


def _fresh_name(base: str, avoid: Set[str]) -> str:
    n = 1
    while f"{base}{n}" in avoid:
        n += 1
    return f"{base}{n}"


def subst(t: SimpleType, phi: Mapping[str, SimpleType]) -> SimpleType:
    """Capture-avoiding simultaneous substitution of type variables."""
    if not phi:
        return t
    if isinstance(t, TVar):
        return phi.get(t.name, t)
    if isinstance(t, TSum):
        return TSum(tuple(subst(i, phi) for i in t.items))
    if isinstance(t, TApp):
        return TApp(t.functor, tuple(subst(a, phi) for a in t.args))
    if isinstance(t, TMu):
        body_free = free_vars(t.body)
        inner = {k: v for k, v in phi.items() if k != t.var and k in body_free}
        if not inner:
            return t
        incoming: Set[str] = set().union(*(free_vars(v) for v in inner.values()))
        var, body = t.var, t.body
        if var in incoming:
            var = _fresh_name(t.var, incoming | body_free | set(inner))
            body = subst(body, {t.var: TVar(var)})
        return TMu(var, subst(body, inner))
    return t


def subst_pt(pt: PredicateType, phi: Mapping[str, SimpleType]) -> PredicateType:
    return PredicateType(tuple(subst(a, phi) for a in pt.args))


def unfold(t: TMu) -> SimpleType:
    return subst(t.body, {t.var: t})


_RANK = {TBase: 0, TConst: 1, TApp: 2, TMu: 3, TVar: 4, TBool: 5, TSum: 6}


def _sort_key(t: SimpleType):
    if isinstance(t, TBase) and t.name in BASE_TYPES:
        return (0, BASE_TYPES.index(t.name), "")
    return (_RANK[type(t)], 0, show_type(t))


def canon(t: SimpleType, _depth: int = 0, _ren: Optional[Dict[str, str]] = None) -> SimpleType:
    """Canonical representative modulo sum reordering and mu-binder renaming."""
    if _ren is None:
        taken = [int(v[1:]) for v in free_vars(t) if v.startswith("μ") and v[1:].isdigit()]
        _depth = max(taken, default=-1) + 1
    ren = _ren or {}
    if isinstance(t, TVar):
        return TVar(ren.get(t.name, t.name))
    if isinstance(t, TSum):
        flat: Dict[SimpleType, None] = {}
        for item in t.items:
            c = canon(item, _depth, ren)
            for x in c.items if isinstance(c, TSum) else (c,):
                flat.setdefault(x, None)
        items = sorted(flat, key=_sort_key)
        return mk_sum(items)
    if isinstance(t, TApp):
        return TApp(t.functor, tuple(canon(a, _depth, ren) for a in t.args))
    if isinstance(t, TMu):
        body = normalize_sum(t.body)
        if isinstance(body, TSum) and TVar(t.var) in body.items and len(body.items) > 1:
            # an unguarded occurrence of the binder adds nothing to the least fixpoint
            body = mk_sum(i for i in body.items if i != TVar(t.var))
        if t.var not in free_vars(body):
            return canon(body, _depth, ren)
        name = f"μ{_depth}"
        inner = dict(ren)
        inner[t.var] = name
        return TMu(name, canon(body, _depth + 1, inner))
    return t


def type_equal(a: SimpleType, b: SimpleType) -> bool:
    return canon(a) == canon(b)


def normalize_sum(t: SimpleType) -> SimpleType:
    """Flatten nested sums, drop duplicate summands and sort the rest.

    Binder names are kept; duplicates are detected modulo binder renaming.
    """
    if isinstance(t, TSum):
        flat: List[SimpleType] = []
        for item in t.items:
            n = normalize_sum(item)
            flat.extend(n.items if isinstance(n, TSum) else (n,))
        unique: Dict[SimpleType, SimpleType] = {}
        for item in flat:
            unique.setdefault(canon(item), item)
        return mk_sum(unique[k] for k in sorted(unique, key=_sort_key))
    if isinstance(t, TApp):
        return TApp(t.functor, tuple(normalize_sum(a) for a in t.args))
    if isinstance(t, TMu):
        return TMu(t.var, normalize_sum(t.body))
    return t


def summands(t: SimpleType) -> Tuple[SimpleType, ...]:
    t = normalize_sum(t)
    return t.items if isinstance(t, TSum) else (t,)


def contains_bool(t: SimpleType) -> bool:
    if isinstance(t, TBool):
        return True
    if isinstance(t, TSum):
        return any(contains_bool(i) for i in t.items)
    if isinstance(t, TApp):
        return any(contains_bool(a) for a in t.args)
    if isinstance(t, TMu):
        return contains_bool(t.body)
    return False


def match_type(pattern: SimpleType, target: SimpleType, bindable: Iterable[str],
               phi: Optional[Mapping[str, SimpleType]] = None) -> Optional[Dict[str, SimpleType]]:
    """One-sided unification: a substitution over ``bindable`` with
    ``phi(pattern) == target`` (modulo :func:`canon`), or None."""
    bind = frozenset(bindable)
    start = {k: canon(v) for k, v in (phi or {}).items()}
    return _match(canon(pattern), canon(target), bind, start)


def _match(p: SimpleType, t: SimpleType, bind: FrozenSet[str],
           phi: Dict[str, SimpleType]) -> Optional[Dict[str, SimpleType]]:
    if isinstance(p, TVar) and p.name in bind:
        if any(v.startswith("μ") for v in free_vars(t)):
            return None
        if p.name in phi:
            return phi if phi[p.name] == t else None
        out = dict(phi)
        out[p.name] = t
        return out
    if type(p) is not type(t):
        return None
    if isinstance(p, (TVar, TConst, TBase, TBool)):
        return phi if p == t else None
    if isinstance(p, TApp):
        if p.functor != t.functor or len(p.args) != len(t.args):
            return None
        for pa, ta in zip(p.args, t.args):
            phi = _match(pa, ta, bind, phi)
            if phi is None:
                return None
        return phi
    if isinstance(p, TMu):
        if p.var != t.var:
            return None
        return _match(p.body, t.body, bind, phi)
    if isinstance(p, TSum):
        if len(p.items) != len(t.items):
            return None
        for perm in itertools.permutations(t.items):
            out: Optional[Dict[str, SimpleType]] = phi
            for pa, ta in zip(p.items, perm):
                out = _match(pa, ta, bind, out)
                if out is None:
                    break
            if out is not None:
                return out
        return None
    return None


def rename_apart(t: SimpleType, avoid: Set[str], prefix: str = "_R") -> Tuple[SimpleType, Dict[str, str]]:
    clash = free_vars(t) & avoid
    mapping: Dict[str, str] = {}
    used = set(avoid) | free_vars(t)
    for v in sorted(clash):
        mapping[v] = _fresh_name(prefix, used)
        used.add(mapping[v])
    return subst(t, {k: TVar(v) for k, v in mapping.items()}), mapping


# --- declarations ---------------------------------------------------------------


@dataclass
class DeclInfo:
    name: str
    params: Tuple[str, ...]
    type: SimpleType
    constants: List[str] = field(default_factory=list)
    constructors: List[Tuple[str, int]] = field(default_factory=list)


@dataclass
class Constructor:
    name: str
    decl: str
    params: Tuple[str, ...]
    arg_types: Tuple[SimpleType, ...]
    result: SimpleType


class DeclTable:
    """The ``type`` function: declared types of constants and function symbols.

    Constants not mentioned in any declaration default to ``int`` (integer
    literals) or ``atom``.  Function symbols must be declared.
    """

    def __init__(self, decls: Sequence[TypeDecl] = ()):
        self.source: Tuple[TypeDecl, ...] = tuple(decls)
        self.decls: Dict[str, DeclInfo] = {}
        self.const_owner: Dict[str, str] = {}
        self.ctors: Dict[Tuple[str, int], Constructor] = {}
        raw: Dict[str, TypeDecl] = {}
        for d in decls:
            if d.name in raw:
                from trilog.errors import DuplicateTypeDecl

                raise DuplicateTypeDecl(f"type {d.name} declared twice", d.span)
            raw[d.name] = d
        self._raw = raw
        for d in decls:
            self.decls[d.name] = DeclInfo(d.name, d.params, self._expand_decl(d))
        for d in decls:
            self._register_members(d)

    # expansion of declaration bodies into mu types

    def _expand_decl(self, d: TypeDecl) -> SimpleType:
        stack = {d.name: (tuple(TVar(p) for p in d.params), d.name)}
        env = {p: TVar(p) for p in d.params}
        body = self._expand(d.body, env, stack, d)
        if d.name in free_vars(body):
            return TMu(d.name, body)
        return body

    def _expand(self, t: SimpleType, env: Dict[str, SimpleType],
                stack: Dict[str, Tuple[Tuple[SimpleType, ...], str]], owner: TypeDecl) -> SimpleType:
        if isinstance(t, TConst) and t.symbol in self._raw and not self._raw[t.symbol].params:
            t = TApp(t.symbol, ())
        if isinstance(t, TVar):
            if t.name in env:
                return env[t.name]
            raise DeclarationError(f"type variable {t.name} is not a parameter of {owner.name}", owner.span)
        if isinstance(t, TSum):
            return TSum(tuple(self._expand(i, env, stack, owner) for i in t.items))
        if isinstance(t, TMu):
            inner = dict(env)
            inner[t.var] = TVar(t.var)
            return TMu(t.var, self._expand(t.body, inner, stack, owner))
        if isinstance(t, TApp):
            args = tuple(self._expand(a, env, stack, owner) for a in t.args)
            target = self._raw.get(t.functor)
            if target is not None and len(target.params) == len(args):
                if target.name in stack:
                    expected, binder = stack[target.name]
                    if tuple(canon(a) for a in args) != tuple(canon(e) for e in expected):
                        raise DeclarationError(
                            f"non-regular recursive use of {target.name} in {owner.name}", owner.span)
                    return TVar(binder)
                inner_stack = dict(stack)
                inner_stack[target.name] = (args, target.name)
                inner_env = dict(zip(target.params, args))
                body = self._expand(target.body, inner_env, inner_stack, target)
                return TMu(target.name, body) if target.name in free_vars(body) else body
            return TApp(t.functor, args)
        if isinstance(t, TBool):
            raise DeclarationError("declared types never include bool", owner.span)
        return t

    def _register_members(self, d: TypeDecl) -> None:
        info = self.decls[d.name]
        full = info.type
        body = unfold(full) if isinstance(full, TMu) else full
        for item in (body.items if isinstance(body, TSum) else (body,)):
            if isinstance(item, TConst):
                if item.symbol in self.const_owner:
                    raise DeclarationError(f"constant {item.symbol} declared in two types", d.span)
                self.const_owner[item.symbol] = d.name
                info.constants.append(item.symbol)
            elif isinstance(item, TApp) and item.functor not in self.decls:
                key = (item.functor, len(item.args))
                if key in self.ctors:
                    raise DeclarationError(f"constructor {key[0]}/{key[1]} declared in two types", d.span)
                self.ctors[key] = Constructor(item.functor, d.name, d.params, item.args, full)
                info.constructors.append(key)
            else:
                raise DeclarationError(
                    f"summand {show_type(item)} of {d.name} is not a constant or constructor application",
                    d.span)

    # the type function

    def type_of_constant(self, symbol: str) -> SimpleType:
        owner = self.const_owner.get(symbol)
        if owner is not None:
            return self.decls[owner].type
        return TBase(default_base_type(symbol))

    def type_of_functor(self, name: str, arity: int) -> Constructor:
        try:
            return self.ctors[name, arity]
        except KeyError:
            raise UndeclaredSymbol(f"function symbol {name}/{arity} has no declared type") from None

    def has_functor(self, name: str, arity: int) -> bool:
        return (name, arity) in self.ctors

    def symbol_domain(self, symbol: str, arity: int) -> str:
        """Id of the domain a constant or constructor's values live in."""
        if arity == 0:
            owner = self.const_owner.get(symbol)
            return owner if owner is not None else default_base_type(symbol)
        return self.type_of_functor(symbol, arity).decl

    def type_params(self, t: SimpleType) -> Set[str]:
        return free_vars(t)

    def resolve(self, t: SimpleType) -> SimpleType:
        """Expand references to declared type names (``list(int)``)."""
        if isinstance(t, TSum):
            return TSum(tuple(self.resolve(i) for i in t.items))
        if isinstance(t, TMu):
            return TMu(t.var, self.resolve(t.body))
        if isinstance(t, TApp):
            args = tuple(self.resolve(a) for a in t.args)
            info = self.decls.get(t.functor)
            if info is not None and len(info.params) == len(args):
                return subst(info.type, dict(zip(info.params, args)))
            return TApp(t.functor, args)
        if isinstance(t, TConst) and t.symbol in self.decls and not self.decls[t.symbol].params:
            return self.decls[t.symbol].type
        return t

    def alias(self, t: SimpleType) -> Optional[str]:
        for info in self.decls.values():
            phi = match_type(info.type, t, info.params)
            if phi is None:
                continue
            if not info.params:
                return info.name
            args = ", ".join(show_type(phi.get(p, TVar(p)), self) for p in info.params)
            return f"{info.name}({args})"
        return None

    def show(self, t) -> str:
        if isinstance(t, PredicateType):
            return show_predicate_type(t, self)
        if isinstance(t, TypeScheme):
            return show_predicate_type(t.body, self)
        return show_type(t, self)


def default_base_type(symbol: str) -> str:
    return "int" if is_integer_symbol(symbol) else "atom"


ANY_DOMAIN = "*"


def domain_keys(t: SimpleType, decls: DeclTable, _bound: FrozenSet[str] = frozenset()) -> Set[str]:
    """Domain ids a type's values may inhabit; free type variables give
    ``?name`` placeholders (one unknown domain each)."""
    if isinstance(t, TBase):
        return {t.name}
    if isinstance(t, TBool):
        return {"Bool"}
    if isinstance(t, TConst):
        return {decls.symbol_domain(t.symbol, 0)}
    if isinstance(t, TApp):
        return {decls.symbol_domain(t.functor, len(t.args))}
    if isinstance(t, TVar):
        return set() if t.name in _bound else {"?" + t.name}
    if isinstance(t, TMu):
        return domain_keys(t.body, decls, _bound | {t.var})
    if isinstance(t, TSum):
        return set().union(*(domain_keys(i, decls, _bound) for i in t.items))
    raise TypeError(t)


def domain_uniform(t: SimpleType, decls: DeclTable) -> bool:
    """True when every value of ``t`` lies in a single domain."""
    return len(domain_keys(t, decls)) <= 1


def signature_domains(t: SimpleType, decls: DeclTable, universe: Universe) -> FrozenSet[str]:
    keys = domain_keys(t, decls)
    if any(k.startswith("?") for k in keys):
        return universe.term_domain_ids()
    return frozenset(k for k in keys if k in universe.domains)


# --- set semantics --------------------------------------------------------------

TypeVarAssignment = Mapping[str, Union[str, Iterable[str]]]


def _assigned_values(name: str, assign: Optional[TypeVarAssignment], universe: Universe) -> FrozenSet[Value]:
    if assign is None or name not in assign:
        return frozenset(universe.values())
    doms = assign[name]
    if isinstance(doms, str):
        doms = (doms,)
    return frozenset(universe.members(doms))


def tsem(t: SimpleType, interp: Interpretation, universe: Universe,
         assign: Optional[TypeVarAssignment] = None,
         _env: Optional[Dict[str, FrozenSet[Value]]] = None) -> FrozenSet[Value]:
    """The set of values denoted by ``t``.

    ``assign`` maps free type variables to a domain id (or several); an
    unassigned variable denotes every term value.
    """
    env = _env or {}
    if isinstance(t, TVar):
        if t.name in env:
            return env[t.name]
        return _assigned_values(t.name, assign, universe)
    if isinstance(t, TConst):
        return frozenset({interp.constant(t.symbol)})
    if isinstance(t, TBase):
        dom = universe.base_types.get(t.name)
        if dom is None:
            raise MissingSymbol(f"base type {t.name} has no domain in this universe")
        return universe.domains[dom].members
    if isinstance(t, TBool):
        return frozenset({BoolV(True), BoolV(False)})
    if isinstance(t, TSum):
        out: Set[Value] = set()
        for item in t.items:
            out |= tsem(item, interp, universe, assign, env)
        return frozenset(out)
    if isinstance(t, TApp):
        func = interp.functor(t.functor, len(t.args))
        arg_sets = [tsem(a, interp, universe, assign, env) for a in t.args]
        out = set()
        for args in itertools.product(*arg_sets):
            if not all(domain_of(a) in doms for a, doms in zip(args, func.signature)):
                continue
            res = func.table.get(args)
            if res is not None:
                out.add(res)
        return frozenset(out)
    if isinstance(t, TMu):
        return mu_iterates(t, interp, universe, assign, env)[-1]
    raise TypeError(f"not a simple type: {t!r}")


def mu_iterates(t: TMu, interp: Interpretation, universe: Universe,
                assign: Optional[TypeVarAssignment] = None,
                _env: Optional[Dict[str, FrozenSet[Value]]] = None) -> List[FrozenSet[Value]]:
    """The Kleene chain F(∅), F²(∅), ... up to and including the first repeat."""
    env = dict(_env or {})
    current: FrozenSet[Value] = frozenset()
    chain: List[FrozenSet[Value]] = []
    while True:
        env[t.var] = current
        nxt = tsem(t.body, interp, universe, assign, env)
        chain.append(nxt)
        if nxt == current:
            return chain
        current = nxt


def assoc_domain(t: SimpleType, interp: Interpretation, universe: Universe,
                 assign: Optional[TypeVarAssignment] = None) -> FrozenSet[Value]:
    """The values D with ``t ~ D``; undefined (ValueError) for bool."""
    if contains_bool(t):
        raise ValueError(f"{show_type(t)} has no associated term domain")
    return tsem(t, interp, universe, assign)


def tsem_product(types: Sequence[SimpleType], interp: Interpretation, universe: Universe,
                 assign: Optional[TypeVarAssignment] = None) -> List[Tuple[Value, ...]]:
    sets = [sorted(tsem(a, interp, universe, assign), key=_vkey) for a in types]
    return list(itertools.product(*sets))


def _vkey(v):
    from trilog.semantics import value_key

    return value_key(v)


def ground_instances(universe: Universe, decls: DeclTable, interp: Interpretation) -> List[SimpleType]:
    """A finite stand-in for "every ground simple type" over this universe.

    Base types with a domain, declared constants, declared types applied to
    those, and pairwise sums of base types.
    """
    level0: List[SimpleType] = [TBase(b) for b in sorted(universe.base_types)]
    level0 += [TConst(c) for c in sorted(interp.constants)]
    out: List[SimpleType] = list(level0)
    for info in decls.decls.values():
        if not info.params:
            out.append(info.type)
            continue
        fillers = [TBase(b) for b in sorted(universe.base_types)]
        for combo in itertools.product(fillers, repeat=len(info.params)):
            out.append(subst(info.type, dict(zip(info.params, combo))))
    bases = [TBase(b) for b in sorted(universe.base_types)]
    for a, b in itertools.combinations(bases, 2):
        out.append(TSum((a, b)))
    return out


def psem_member(pred: PredFunc, pt: Union[PredicateType, TypeScheme], interp: Interpretation,
                universe: Universe, decls: Optional[DeclTable] = None,
                assign: Optional[TypeVarAssignment] = None, cap: Optional[int] = None) -> bool:
    """Whether ``pred`` is never wrong on arguments drawn from the argument types."""
    cap = max_states_default() if cap is None else cap
    if isinstance(pt, TypeScheme):
        decls = decls or DeclTable()
        if not pt.quantified:
            return psem_member(pred, pt.body, interp, universe, decls, assign, cap)
        names = sorted(pt.quantified)
        for combo in itertools.product(ground_instances(universe, decls, interp), repeat=len(names)):
            if not psem_member(pred, subst_pt(pt.body, dict(zip(names, combo))), interp, universe,
                               decls, assign, cap):
                return False
        return True
    sets = [tsem(a, interp, universe, assign) for a in pt.args]
    total = 1
    for s in sets:
        total *= len(s)
    if total > cap:
        raise UniverseTooLarge(f"{total} argument tuples exceed the cap of {cap}")
    for args in itertools.product(*sets):
        if any(a is WRONG_VALUE for a in args) or pred.apply(args) is W:
            return False
    return True
