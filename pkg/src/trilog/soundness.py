"""Where types meet the semantics.

* :func:`build_interpretation` constructs the canonical interpretation of a
  program: basic domains from its constants, depth-bounded tree domains from
  its type declarations, free constructor tables, and predicate tables taken
  from the least model of the clauses.
* :func:`semantic_typing_check` decides ``Gamma |= M : tau`` by enumeration,
  searching for a split of the context over the clause's branches.
* :func:`verify_soundness` runs the checker's branch contexts against the
  canonical interpretation and counts wrong outcomes, keeping depth
  truncations in a separate bucket.
* :func:`generate_program` produces random normalized programs for
  property tests.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union

from trilog.ast import (
    Call,
    Clause,
    Compound,
    Const,
    Goal,
    GoalSeq,
    Program,
    Term,
    Unify,
    Var,
    make_list,
    program_symbols,
    seq_vars,
    term_vars,
    goal_vars,
)
from trilog.errors import (
    MissingSymbol,
    SoundnessViolation,
    SplitSpaceTooLarge,
    UniverseTooLarge,
)
from trilog.parser import parse_program
from trilog.semantics import (
    F,
    T,
    W,
    WRONG_VALUE,
    Base,
    Domain,
    EvalLog,
    Func,
    Interpretation,
    PredFunc,
    Tree,
    TruthValue,
    Universe,
    Value,
    domain_of,
    eval_clause,
    eval_goal,
    eval_term,
    least_model,
    max_states_default,
    show_value,
    states_over,
    value_key,
    enumerate_state_lists,
)
from trilog.typechecker import CheckResult, Context, check_program
from trilog.types import (
    BASE_TYPES,
    TBool,
    DeclTable,
    SimpleType,
    TSum,
    canon,
    default_base_type,
    domain_keys,
    free_vars,
    normalize_sum,
    show_type,
    signature_domains,
    summands,
    tsem,
)

SPLIT_CAP = 2 ** 12


# --- semantic typing of values and states ------------------------------------------------


class TypeSemantics:
    """Memoized tsem for one interpretation."""

    def __init__(self, interp: Interpretation, universe: Universe):
        self.interp = interp
        self.universe = universe
        self._cache: Dict[tuple, FrozenSet[Value]] = {}

    def __call__(self, t: SimpleType, assign: Optional[Mapping[str, str]] = None) -> FrozenSet[Value]:
        fv = free_vars(t)
        rho = tuple(sorted((k, v) for k, v in (assign or {}).items() if k in fv))
        key = (canon(t), rho)
        if key not in self._cache:
            self._cache[key] = tsem(t, self.interp, self.universe, dict(rho))
        return self._cache[key]


def value_has_type(v: Value, t: SimpleType, interp: Interpretation, universe: Universe,
                   assign: Optional[Mapping[str, str]] = None) -> bool:
    if v is WRONG_VALUE:
        return False
    if isinstance(t, TBool):
        return v in tsem(t, interp, universe)
    return v in tsem(t, interp, universe, assign)


def context_holds(ctx: Mapping[str, SimpleType], interp: Interpretation, state: Mapping[str, Value],
                  universe: Universe, assign: Optional[Mapping[str, str]] = None) -> bool:
    return all(value_has_type(state[x], t, interp, universe, assign) for x, t in ctx.items())


# --- universe configuration ----------------------------------------------------------------


@dataclass
class UniverseConfig:
    """How to build the finite universe.

    ``partition`` is ``typed`` (domains follow the types), ``herbrand`` (one
    domain holding every value) or ``singleton`` (one domain per value).
    ``domains`` replaces the basic domains inferred from the program; in that
    case ``constants`` says which domain each constant belongs to (by default
    the domain listing the constant's token).
    """

    depth: int = 3
    partition: str = "typed"
    extra_tokens: Dict[str, List[str]] = field(default_factory=dict)
    domains: Optional[Dict[str, List[str]]] = None
    base_types: Optional[Dict[str, str]] = None
    constants: Dict[str, str] = field(default_factory=dict)
    predicates: Dict[str, List[List[str]]] = field(default_factory=dict)

    @classmethod
    def from_json(cls, data: Union[str, dict]) -> "UniverseConfig":
        if isinstance(data, str):
            data = json.loads(data)
        known = {"depth", "partition", "extra_tokens", "domains", "base_types", "constants", "predicates"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown universe keys: {', '.join(sorted(unknown))}")
        return cls(**data)


@dataclass
class _TreeSpec:
    domain: str
    nullary: List[str]
    ctors: List[Tuple[str, int, Tuple[Tuple[str, ...], ...]]]


def _program_constants(program: Program, decls: DeclTable) -> List[str]:
    out = [s for s, n in program_symbols(program) if n == 0]
    for info in decls.decls.values():
        out += [c for c in info.constants if c not in out]
    return out


def _mentioned_base_types(decls: DeclTable, check: Optional[CheckResult]) -> Set[str]:
    out: Set[str] = set()

    def visit(t: SimpleType) -> None:
        text = show_type(t)
        for b in BASE_TYPES:
            if b in text.replace("(", " ").replace(")", " ").replace("|", " ").replace("[", " ").replace("]", " ").replace(",", " ").split():
                out.add(b)

    if check is not None:
        for r in check.predicates.values():
            if r.scheme is not None:
                for a in r.scheme.body.args:
                    visit(a)
    for info in decls.decls.values():
        visit(info.type)
    return out


def _closure(specs: List[_TreeSpec], basic: Dict[str, List[Value]], depth: int,
             all_ids: Tuple[str, ...]) -> Dict[str, Set[Value]]:
    values: Dict[str, Set[Value]] = {d: set(vs) for d, vs in basic.items()}
    for spec in specs:
        values[spec.domain] = {Tree(spec.domain, c) for c in spec.nullary}
    changed = True
    while changed:
        changed = False
        for spec in specs:
            for name, _, sig in spec.ctors:
                pools = [sorted(set().union(*(values.get(d, set()) for d in doms)), key=value_key)
                         for doms in sig]
                for args in itertools.product(*pools):
                    if 1 + max(a.depth for a in args) > depth:
                        continue
                    t = Tree(spec.domain, name, args)
                    if t not in values[spec.domain]:
                        values[spec.domain].add(t)
                        changed = True
    return values


def _redomain(v: Value, f) -> Value:
    if isinstance(v, Base):
        return Base(f(v), v.token)
    if isinstance(v, Tree):
        return Tree(f(v), v.functor, tuple(_redomain(c, f) for c in v.children))
    return v


def build_interpretation(program: Program, decls: Optional[DeclTable] = None,
                         config: Optional[UniverseConfig] = None,
                         check: Optional[CheckResult] = None) -> Tuple[Interpretation, Universe]:
    """The canonical interpretation of ``program`` and its finite universe."""
    config = config or UniverseConfig()
    decls = decls if decls is not None else DeclTable(program.type_decls)
    if check is None:
        check = check_program(program, decls)
    program = check.program
    consts = _program_constants(program, decls)

    # basic domains
    const_dom: Dict[str, str] = {}
    basic_tokens: Dict[str, List[str]] = {}
    if config.domains is not None:
        basic_tokens = {d: list(ts) for d, ts in config.domains.items()}
        base_types = dict(config.base_types or {b: b for b in BASE_TYPES if b in basic_tokens})
        for c in consts:
            if c in decls.const_owner:
                continue
            dom = config.constants.get(c) or next((d for d, ts in basic_tokens.items() if c in ts), None)
            if dom is None:
                raise MissingSymbol(f"constant {c} is in no domain of the universe")
            if c not in basic_tokens[dom]:
                basic_tokens[dom].append(c)
            const_dom[c] = dom
    else:
        needed = _mentioned_base_types(decls, check)
        for c in consts:
            if c in decls.const_owner:
                continue
            b = default_base_type(c)
            basic_tokens.setdefault(b, []).append(c)
            const_dom[c] = b
        for b, toks in config.extra_tokens.items():
            for tok in toks:
                if tok not in basic_tokens.setdefault(b, []):
                    basic_tokens[b].append(tok)
        for b in needed:
            if not basic_tokens.get(b):
                basic_tokens[b] = ["0" if b == "int" else ("0.0" if b == "float" else "k")]
        base_types = {b: b for b in basic_tokens}
    basic: Dict[str, List[Value]] = {d: [Base(d, t) for t in ts] for d, ts in basic_tokens.items()}

    # tree domains from declarations
    all_ids = tuple(sorted(set(basic) | set(decls.decls)))
    specs = []
    for info in decls.decls.values():
        ctors = []
        for key in info.constructors:
            ctor = decls.ctors[key]
            sig = []
            for t in ctor.arg_types:
                keys = domain_keys(t, decls)
                if any(k.startswith("?") for k in keys):
                    sig.append(all_ids)
                else:
                    sig.append(tuple(sorted(keys)))
            ctors.append((ctor.name, len(ctor.arg_types), tuple(sig)))
        specs.append(_TreeSpec(info.name, list(info.constants), ctors))
    values = _closure(specs, basic, config.depth, all_ids)

    constants: Dict[str, Value] = {}
    for c in consts:
        if c in decls.const_owner:
            constants[c] = Tree(decls.const_owner[c], c)
        else:
            constants[c] = Base(const_dom[c], c)
    functors: Dict[Tuple[str, int], Func] = {}
    for spec in specs:
        for name, n, sig in spec.ctors:
            table: Dict[Tuple[Value, ...], Value] = {}
            complete = True
            pools = [sorted(set().union(*(values.get(d, set()) for d in doms)), key=value_key) for doms in sig]
            for args in itertools.product(*pools):
                t = Tree(spec.domain, name, args)
                if t in values[spec.domain]:
                    table[args] = t
                else:
                    complete = False
            functors[name, n] = Func(name, tuple(frozenset(d) for d in sig), spec.domain, table, complete)

    domains = {d: Domain(d, "basic" if d in basic else "tree", frozenset(vs)) for d, vs in values.items()
               if vs or d in basic}
    domains = {d: dom for d, dom in domains.items() if dom.members}

    if config.partition in ("herbrand", "singleton"):
        if config.partition == "herbrand":
            f = lambda v: "H"
        else:
            f = lambda v: f"{v.domain}:{show_value(v)}"
        mapping = {v: _redomain(v, f) for d in domains.values() for v in d.members}
        new_domains: Dict[str, Set[Value]] = {}
        for v2 in mapping.values():
            new_domains.setdefault(domain_of(v2), set()).add(v2)
        domains = {d: Domain(d, "basic" if isinstance(next(iter(vs)), Base) or d == "H" else "tree",
                             frozenset(vs)) for d, vs in new_domains.items()}
        ids = frozenset(domains)
        constants = {c: mapping.get(v, _redomain(v, f)) for c, v in constants.items()}
        functors = {
            k: Func(fn.name, tuple(ids for _ in fn.signature), "H" if config.partition == "herbrand" else "*",
                    {tuple(mapping[a] for a in args): mapping[r] for args, r in fn.table.items()},
                    fn.complete)
            for k, fn in functors.items()
        }
        base_types = {b: "H" for b in base_types} if config.partition == "herbrand" else {}
    elif config.partition != "typed":
        raise ValueError(f"unknown partition {config.partition!r}")

    universe = Universe(domains, config.depth, base_types, config.partition)
    interp = Interpretation(constants, functors, {})
    all_doms = universe.term_domain_ids()
    for c in program.clauses:
        res = check.predicates.get(c.head_predicate)
        if c.head_predicate in config.predicates:
            sig = tuple(frozenset(ds) for ds in config.predicates[c.head_predicate])
        elif res is not None and res.scheme is not None and config.partition == "typed":
            sig = tuple(signature_domains(t, decls, universe) for t in res.scheme.body.args)
        else:
            sig = tuple(all_doms for _ in c.head_args)
        interp.predicates[c.head_predicate] = PredFunc(c.head_predicate, sig)
    least_model(program, interp, universe)
    return interp, universe


def constant_type_failures(program: Program, decls: DeclTable, interp: Interpretation,
                    universe: Universe) -> List[str]:
    """Declared or used constants whose value is not in the semantics of their type."""
    bad = []
    for c in _program_constants(program, decls):
        if c not in interp.constants:
            bad.append(c)
            continue
        if not value_has_type(interp.constant(c), decls.type_of_constant(c), interp, universe):
            bad.append(c)
    return bad


# --- Definition-style semantic typing -----------------------------------------------------------


@dataclass
class TypingReport:
    holds: bool
    split: Optional[List[Context]] = None
    counterexample: Optional[dict] = None
    states_checked: int = 0
    wrong_count: int = 0
    truncation_count: int = 0
    splits_tried: int = 0
    vacuous: bool = False


def _type_assignments(contexts: Sequence[Mapping[str, SimpleType]], universe: Universe,
                      cap: int) -> List[Dict[str, str]]:
    names = sorted(set().union(set(), *(free_vars(t) for ctx in contexts for t in ctx.values())))
    ids = sorted(universe.term_domain_ids())
    if len(ids) ** len(names) > cap:
        raise UniverseTooLarge(f"{len(ids)}^{len(names)} type-variable assignments exceed the cap")
    return [dict(zip(names, combo)) for combo in itertools.product(ids, repeat=len(names))]


@dataclass
class _BranchOutcome:
    states: int = 0
    wrong: int = 0
    truncated: int = 0
    first_wrong: Optional[Dict[str, Value]] = None


def _check_branch(seq: GoalSeq, head: Optional[Call], ctx: Mapping[str, SimpleType], rho: Mapping[str, str],
                  interp: Interpretation, sem: TypeSemantics, cap: int,
                  extra_vars: Sequence[str] = (), exists_only: bool = False) -> Optional[_BranchOutcome]:
    """Evaluates one goal sequence (and the head call) over every state
    satisfying ``ctx``.  None when no state satisfies it.  With
    ``exists_only`` the counts only say whether a wrong state exists.

    A conjunction is wrong exactly when one of its goals is, so each goal is
    evaluated over its own variables only; full states are enumerated just
    over the variables of goals that went wrong somewhere.  A state counts as
    wrong when some goal is wrong without touching a truncated table entry,
    and as truncated when every wrong goal hit the depth bound.
    """
    names = list(ctx)
    for v in list(seq_vars(seq)) + list(extra_vars):
        if v not in names:
            names.append(v)
    choices: Dict[str, List[Value]] = {}
    for x in names:
        pool = sem(ctx[x], rho) if x in ctx else frozenset(sem.universe.values())
        if not pool:
            return None
        choices[x] = sorted(pool, key=value_key)
    goals = list(seq) + ([head] if head is not None else [])
    log = EvalLog()
    bad: List[Tuple[List[str], Set[tuple], Set[tuple]]] = []
    for g in goals:
        vs = list(dict.fromkeys(goal_vars(g)))
        genuine: Set[tuple] = set()
        trunc: Set[tuple] = set()
        for state in states_over({v: choices[v] for v in vs}, cap):
            log.clear()
            if eval_goal(g, interp, state, log) is W:
                key = tuple(state[v] for v in sorted(vs))
                (trunc if log.truncations else genuine).add(key)
        if genuine or trunc:
            bad.append((sorted(vs), genuine, trunc))
    out = _BranchOutcome()
    out.states = 1
    for x in names:
        out.states *= len(choices[x])
    if not bad:
        return out
    if exists_only:
        out.wrong = int(any(gen for _, gen, _ in bad))
        out.truncated = int(any(tr for _, _, tr in bad))
        return out
    relevant = sorted(set().union(*(set(vs) for vs, _, _ in bad)))
    rest = out.states
    for x in relevant:
        rest //= len(choices[x])
    pools = {x: choices[x] for x in relevant}
    no_genuine = _count_avoiding([(vs, gen) for vs, gen, _ in bad], pools, cap)
    clean = _count_avoiding([(vs, gen | tr) for vs, gen, tr in bad], pools, cap)
    total = out.states // rest
    out.wrong = (total - no_genuine) * rest
    out.truncated = (no_genuine - clean) * rest
    for vs, gen, _ in bad:
        if gen:
            full = {x: choices[x][0] for x in names}
            full.update(zip(vs, min(gen, key=lambda k: [value_key(v) for v in k])))
            out.first_wrong = full
            break
    return out


def _count_avoiding(forbidden: Sequence[Tuple[List[str], Set[tuple]]], pools: Mapping[str, List[Value]],
                    cap: int) -> int:
    """Number of assignments over ``pools`` that avoid every forbidden local
    tuple, by summing out one variable at a time."""
    factors: List[Tuple[Tuple[str, ...], Dict[tuple, int]]] = []
    for vs, bad in forbidden:
        if not bad:
            continue
        table = {}
        for combo in itertools.product(*(pools[v] for v in vs)):
            table[combo] = 0 if combo in bad else 1
        factors.append((tuple(vs), table))
    remaining = set(pools)
    result = 1
    while remaining:
        # the variable touching the fewest other variables goes first
        def width(x: str) -> int:
            return len(set().union(set(), *(set(f[0]) for f in factors if x in f[0])))

        x = min(sorted(remaining), key=width)
        remaining.discard(x)
        touching = [f for f in factors if x in f[0]]
        factors = [f for f in factors if x not in f[0]]
        if not touching:
            result *= len(pools[x])
            continue
        scope = tuple(sorted(set().union(*(set(f[0]) for f in touching)) - {x}))
        size = 1
        for v in scope:
            size *= len(pools[v])
        if size * len(pools[x]) > cap:
            raise UniverseTooLarge(f"counting states needs a table of {size * len(pools[x])} entries")
        table: Dict[tuple, int] = {}
        for combo in itertools.product(*(pools[v] for v in scope)):
            env = dict(zip(scope, combo))
            total = 0
            for value in pools[x]:
                env[x] = value
                prod = 1
                for vs, t in touching:
                    prod *= t[tuple(env[v] for v in vs)]
                    if not prod:
                        break
                total += prod
            table[combo] = total
        if scope:
            factors.append((scope, table))
        else:
            result *= table[()]
    return result


def _clause_under_split(c: Clause, split: Sequence[Mapping[str, SimpleType]], interp: Interpretation,
                        sem: TypeSemantics, cap: int) -> TypingReport:
    body = c.body or ((),)
    head = c.head_call
    report = TypingReport(True, [dict(s) for s in split])
    rhos = _type_assignments(split, sem.universe, cap)
    cache: Dict[Tuple[int, tuple], Optional[_BranchOutcome]] = {}
    any_nonvacuous = False
    for rho in rhos:
        outcomes = []
        for k, (seq, ctx) in enumerate(zip(body, split)):
            fv = set().union(set(), *(free_vars(t) for t in ctx.values()))
            key = (k, tuple(sorted((a, b) for a, b in rho.items() if a in fv)))
            if key not in cache:
                cache[key] = _check_branch(seq, head, ctx, rho, interp, sem, cap,
                                           [a.name for a in c.head_args])
            outcomes.append(cache[key])
        if any(o is None for o in outcomes):
            continue
        any_nonvacuous = True
        for k, o in enumerate(outcomes):
            if o.wrong and report.counterexample is None:
                report.counterexample = {
                    "branch": k + 1,
                    "state": {x: show_value(v) for x, v in o.first_wrong.items()},
                    "type_assignment": dict(rho),
                    "value": str(W),
                }
    counted = {key: o for key, o in cache.items() if o is not None}
    report.states_checked = sum(o.states for o in counted.values())
    report.wrong_count = sum(o.wrong for o in counted.values())
    report.truncation_count = sum(o.truncated for o in counted.values())
    report.vacuous = not any_nonvacuous
    report.holds = report.counterexample is None
    return report


def _candidate_splits(ctx: Mapping[str, SimpleType], c: Clause) -> Iterable[List[Context]]:
    body = c.body or ((),)
    n = len(body)
    heads = [a.name for a in c.head_args]
    per_var: List[List[Tuple[SimpleType, ...]]] = []
    for h in heads:
        parts = summands(ctx[h])
        subsets = [combo for r in range(1, len(parts) + 1) for combo in itertools.combinations(parts, r)]
        covers = [choice for choice in itertools.product(subsets, repeat=n)
                  if set().union(*(set(s) for s in choice)) == set(parts)]
        per_var.append(covers)
    total = 1
    for covers in per_var:
        total *= len(covers)
    if total > SPLIT_CAP:
        raise SplitSpaceTooLarge(f"{total} candidate context splits exceed {SPLIT_CAP}")
    for combo in itertools.product(*per_var):
        split: List[Context] = []
        for k, seq in enumerate(body):
            g: Context = {}
            for h, choice in zip(heads, combo):
                g[h] = normalize_sum(TSum(choice[k])) if len(choice[k]) > 1 else choice[k][0]
            for v in seq_vars(seq):
                if v not in g and v in ctx:
                    g[v] = ctx[v]
            split.append(g)
        placed = set().union(*(set(g) for g in split))
        for v, t in ctx.items():
            if v not in placed:
                split[0][v] = t
        yield split


def semantic_typing_check(ctx: Mapping[str, SimpleType], m: Union[Term, Goal, Clause],
                          t: SimpleType, program: Program, interp: Interpretation, universe: Universe,
                          hints: Sequence[Sequence[Mapping[str, SimpleType]]] = (),
                          cap: Optional[int] = None) -> TypingReport:
    """Search for a context split under which every satisfying state list gives
    ``m`` a value of type ``t``.  ``hints`` are splits to try first."""
    cap = max_states_default() if cap is None else cap
    sem = TypeSemantics(interp, universe)
    if isinstance(m, Clause):
        tried = 0
        last: Optional[TypingReport] = None
        for split in list(hints) + list(_candidate_splits(ctx, m)):
            tried += 1
            rep = _clause_under_split(m, split, interp, sem, cap)
            rep.splits_tried = tried
            if rep.holds:
                return rep
            last = last or rep
        if last is None:
            return TypingReport(True, [], splits_tried=0, vacuous=True)
        last.holds = False
        last.splits_tried = tried
        return last
    names = list(term_vars(m)) if isinstance(m, (Var, Const, Compound)) else list(goal_vars(m))
    report = TypingReport(True, [dict(ctx)], splits_tried=1)
    rhos = _type_assignments([ctx, {"_": t}], universe, cap)
    log = EvalLog()
    nonvacuous = False
    for rho in rhos:
        choices = {}
        for x in dict.fromkeys(names):
            pool = sem(ctx[x], rho) if x in ctx else frozenset(universe.values())
            choices[x] = sorted(pool, key=value_key)
        if any(not v for v in choices.values()):
            continue
        target = tsem(t, interp, universe, rho) if not isinstance(t, TBool) else frozenset({T, F})
        nonvacuous = True
        for state in states_over(choices, cap):
            log.clear()
            if isinstance(m, (Var, Const, Compound)):
                value = eval_term(m, interp, state, log)
                ok = value in target
            else:
                value = eval_goal(m, interp, state, log)
                ok = value in (T, F)
            report.states_checked += 1
            if log.truncations:
                report.truncation_count += 1
                continue
            if not ok:
                report.wrong_count += 1
                if report.counterexample is None:
                    report.counterexample = {"state": {x: show_value(v) for x, v in state.items()},
                                             "type_assignment": dict(rho),
                                             "value": show_value(value) if not isinstance(value, TruthValue)
                                             else str(value)}
    report.vacuous = not nonvacuous
    report.holds = report.counterexample is None
    return report


# --- the soundness harness ---------------------------------------------------------------------


@dataclass
class PredicateReport:
    predicate: str
    status: str  # ok | violation | truncated
    states_checked: int
    wrong_count: int
    truncation_count: int
    witness_split: Optional[List[Dict[str, str]]]
    counterexample: Optional[dict] = None

    def to_json(self) -> dict:
        out = {
            "predicate": self.predicate,
            "status": self.status,
            "states_checked": self.states_checked,
            "wrong_count": self.wrong_count,
            "truncation_count": self.truncation_count,
            "witness_split": self.witness_split,
        }
        if self.counterexample is not None:
            out["counterexample"] = self.counterexample
        return out


@dataclass
class SoundnessReport:
    predicates: List[PredicateReport]
    interpretation: str
    depth: int

    @property
    def ok(self) -> bool:
        return all(p.status != "violation" for p in self.predicates)

    @property
    def wrong_count(self) -> int:
        return sum(p.wrong_count for p in self.predicates)

    def to_json(self) -> dict:
        return {
            "interpretation": self.interpretation,
            "depth": self.depth,
            "ok": self.ok,
            "predicates": [p.to_json() for p in self.predicates],
        }


def verify_soundness(program: Program, decls: Optional[DeclTable] = None,
                     config: Optional[UniverseConfig] = None, check: Optional[CheckResult] = None,
                     cap: Optional[int] = None, strict: bool = False) -> SoundnessReport:
    """Check every predicate's clause under the checker's branch contexts.

    Raises the first type error if the program does not check; with
    ``strict`` a violation raises :class:`SoundnessViolation`.
    """
    cap = max_states_default() if cap is None else cap
    decls = decls if decls is not None else DeclTable(program.type_decls)
    check = check if check is not None else check_program(program, decls)
    if not check.predicates_ok:
        raise next(r.error for r in check.predicates.values() if r.error is not None)
    config = config or UniverseConfig()
    interp, universe = build_interpretation(check.program, decls, config, check)
    sem = TypeSemantics(interp, universe)
    reports = []
    for name, res in check.predicates.items():
        c = check.program.definition(name)
        rep = _clause_under_split(c, res.branch_contexts, interp, sem, cap)
        witness = res.branch_contexts
        if not rep.holds:
            alt = semantic_typing_check(rep_ctx(res), c, TBool(), check.program, interp, universe, cap=cap)
            if alt.holds:
                witness = alt.split
        status = "violation" if rep.wrong_count else ("truncated" if rep.truncation_count else "ok")
        shown = [{x: decls.show(t) for x, t in g.items()} for g in witness]
        reports.append(PredicateReport(name, status, rep.states_checked, rep.wrong_count,
                                       rep.truncation_count, shown, rep.counterexample))
    desc = (f"canonical interpretation, {config.partition} partition, depth {config.depth}, "
            f"{universe.size()} values in {len(universe.domains)} domains")
    report = SoundnessReport(reports, desc, config.depth)
    if strict and not report.ok:
        bad = next(p for p in reports if p.status == "violation")
        raise SoundnessViolation(f"{bad.predicate}: wrong outcome under its checked contexts", report)
    return report


def rep_ctx(res) -> Context:
    out: Context = {}
    for g in res.branch_contexts:
        for x, t in g.items():
            out[x] = normalize_sum(TSum((out[x], t))) if x in out else t
    return out


# --- direct evaluation --------------------------------------------------------------------------


@dataclass
class EvalSummary:
    predicate: str
    count_true: int = 0
    count_false: int = 0
    count_wrong: int = 0
    truncated: int = 0
    states: List[Tuple[List[Dict[str, str]], str]] = field(default_factory=list)

    def values(self) -> Set[TruthValue]:
        out = set()
        if self.count_true:
            out.add(T)
        if self.count_false:
            out.add(F)
        if self.count_wrong:
            out.add(W)
        return out

    def to_json(self, with_states: bool = False) -> dict:
        out = {"predicate": self.predicate, "count_true": self.count_true, "count_false": self.count_false,
               "count_wrong": self.count_wrong, "truncated": self.truncated}
        if with_states:
            out["states"] = [{"states": s, "value": v} for s, v in self.states]
        return out


def evaluate_clause(c: Clause, interp: Interpretation, universe: Universe, cap: Optional[int] = None,
                    keep_states: bool = False) -> EvalSummary:
    """The clause's value under every state list over the whole universe."""
    out = EvalSummary(c.head_predicate)
    log = EvalLog()
    for states in enumerate_state_lists(c, universe, cap):
        log.clear()
        v = eval_clause(c, interp, states, log)
        if log.truncations:
            out.truncated += 1
        if v is T:
            out.count_true += 1
        elif v is F:
            out.count_false += 1
        else:
            out.count_wrong += 1
        if keep_states:
            out.states.append(([{x: show_value(val) for x, val in s.items()} for s in states], str(v)))
    return out


def evaluate_program(program: Program, config: Optional[UniverseConfig] = None,
                     decls: Optional[DeclTable] = None, cap: Optional[int] = None,
                     keep_states: bool = False) -> Tuple[List[EvalSummary], Universe]:
    decls = decls if decls is not None else DeclTable(program.type_decls)
    check = check_program(program, decls)
    interp, universe = build_interpretation(check.program, decls, config, check)
    return [evaluate_clause(c, interp, universe, cap, keep_states) for c in check.program.clauses], universe


def has_wrong_state(program: Program, config: Optional[UniverseConfig] = None,
                    cap: Optional[int] = None) -> bool:
    """Whether some clause evaluates to wrong under some state (branch-wise)."""
    decls = DeclTable(program.type_decls)
    check = check_program(program, decls)
    interp, universe = build_interpretation(check.program, decls, config, check)
    cap = max_states_default() if cap is None else cap
    sem = TypeSemantics(interp, universe)
    for c in check.program.clauses:
        for seq in c.body or ((),):
            o = _check_branch(seq, c.head_call, {}, {}, interp, sem, cap, [a.name for a in c.head_args],
                              exists_only=True)
            if o is not None and o.wrong:
                return True
    return False


# --- random programs -------------------------------------------------------------------------------

TEMPLATES = {
    "nat": ":- type nat = z + s(nat).",
    "list": ":- type list(A) = [] + [A|list(A)].",
    "color": ":- type color = red + green.",
    "opt": ":- type opt(A) = none + some(A).",
}


@dataclass
class SizeParams:
    predicates: int = 3
    arity: int = 3
    branches: int = 3
    goals: int = 4
    ill_typed_rate: float = 0.15

    @classmethod
    def zero(cls) -> "SizeParams":
        return cls(predicates=0)


class _Gen:
    def __init__(self, seed: int, size: SizeParams):
        self.rng = random.Random(seed)
        self.size = size
        r = self.rng
        self.template = r.choice([None, None, "nat", "list", "color", "opt"])
        n_int = r.randint(1, 3)
        n_atom = r.randint(1, 3)
        if self.template == "list":
            n_int, n_atom = min(n_int, 2), 1
        self.ints = sorted(r.sample(["0", "1", "2"], n_int))
        self.atoms = sorted(r.sample(["a", "b", "c"], n_atom))
        self.sorts = ["int", "atom"] + ([self.template] if self.template else [])

    def other_sort(self, sort: str) -> str:
        return self.rng.choice([s for s in self.sorts if s != sort])

    def sort_of_term_choice(self, sort: str) -> str:
        if self.rng.random() < self.size.ill_typed_rate:
            return self.other_sort(sort)
        return sort


class _Branch:
    def __init__(self, gen: _Gen, k: int):
        self.gen = gen
        self.k = k
        self.vars: Dict[str, str] = {}  # local name -> sort
        self.n = 0
        self.f = 0

    def new_var(self, sort: str) -> Var:
        self.n += 1
        name = f"V{self.k}_{self.n}"
        self.vars[name] = sort
        return Var(name)

    def var_of(self, sort: str) -> Var:
        pool = [v for v, s in self.vars.items() if s == sort]
        if pool and self.gen.rng.random() < 0.6:
            return Var(self.gen.rng.choice(pool))
        return self.new_var(sort)

    def term(self, sort: str) -> Term:
        g = self.gen
        r = g.rng
        if sort == "int":
            return Const(r.choice(g.ints))
        if sort == "atom":
            return Const(r.choice(g.atoms))
        if sort == "nat":
            roll = r.random()
            if roll < 0.3:
                return Const("z")
            if roll < 0.5:
                return Compound("s", (Const("z"),))
            return Compound("s", (self.var_of("nat"),))
        if sort == "list":
            roll = r.random()
            if roll < 0.3:
                return Const("[]")
            elem = Const(r.choice(g.ints)) if r.random() < 0.6 else self.var_of("int")
            tail = Const("[]") if roll < 0.6 else self.var_of("list")
            return make_list([elem], tail)
        if sort == "color":
            return Const(r.choice(["red", "green"]))
        if sort == "opt":
            roll = r.random()
            if roll < 0.4:
                return Const("none")
            inner = Const(r.choice(g.ints)) if roll < 0.7 else self.var_of("int")
            return Compound("some", (inner,))
        raise ValueError(sort)

    def fresh_f(self) -> Var:
        self.f += 1
        return Var(f"_F{self.k}_{self.f}")


def generate_program(seed: int, size: Optional[SizeParams] = None) -> Program:
    """A random normalized program (with at most one type declaration).

    Deterministic in ``seed``.  Most programs are well-typed; about one term
    in seven is drawn from a wrong sort.
    """
    size = size or SizeParams()
    if size.predicates <= 0:
        return Program()
    gen = _Gen(seed, size)
    r = gen.rng
    decls = parse_program(TEMPLATES[gen.template]).type_decls if gen.template else ()
    n_preds = r.randint(1, size.predicates)
    defined: List[Tuple[str, List[str]]] = []
    clauses: List[Clause] = []
    for i in range(n_preds):
        name = f"p{i}"
        arity = r.randint(1, max(1, size.arity))
        sorts = [r.choice(gen.sorts) for _ in range(arity)]
        heads = tuple(Var(f"_A{j + 1}") for j in range(arity))
        recursive = r.random() < 0.3
        n_branches = r.randint(1, size.branches)
        body: List[GoalSeq] = []
        for k in range(n_branches):
            b = _Branch(gen, k + 1)
            goals: List[Goal] = []
            for h, sort in zip(heads, sorts):
                if r.random() < 0.8:
                    goals.append(Unify(h, b.term(gen.sort_of_term_choice(sort))))
                else:
                    goals.append(Unify(h, b.var_of(gen.sort_of_term_choice(sort))))
            extra = r.randint(0, min(2, size.goals))
            for _ in range(extra):
                roll = r.random()
                if roll < 0.45 and defined:
                    callee, csorts = r.choice(defined)
                    fs = []
                    for s in csorts:
                        f = b.fresh_f()
                        goals.append(Unify(f, b.var_of(gen.sort_of_term_choice(s))))
                        fs.append(f)
                    goals.append(Call(callee, tuple(fs)))
                elif roll < 0.7 and b.vars:
                    v = r.choice(sorted(b.vars))
                    goals.append(Unify(Var(v), b.term(gen.sort_of_term_choice(b.vars[v]))))
                else:
                    v = b.var_of(r.choice(gen.sorts))
                    goals.append(Unify(v, b.term(gen.sort_of_term_choice(b.vars[v.name]))))
            if recursive and k > 0:
                fs = []
                for s in sorts:
                    f = b.fresh_f()
                    goals.append(Unify(f, b.var_of(gen.sort_of_term_choice(s))))
                    fs.append(f)
                goals.append(Call(name, tuple(fs)))
            body.append(tuple(goals))
        clauses.append(Clause(name, heads, tuple(body)))
        defined.append((name, sorts))
    return Program(tuple(clauses), decls)


def generator_depth(program: Program) -> int:
    """Depth bound used for generated programs (lists grow fastest)."""
    return 2 if any(d.name == "list" for d in program.type_decls) else 3
