"""Command-line entry point.

Exit codes: 0 on success, 1 on domain errors (parse errors, type errors,
soundness violations, a failed subtype query), 2 on usage or I/O errors.
Every subcommand accepts ``--json``.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional, Sequence

from trilog.ast import Clause, Const, Program, Term, Unify, Var, pretty, show_seq
from trilog.errors import TrilogError, TypeCheckError
from trilog.normalizer import normalize
from trilog.parser import parse_program, parse_type
from trilog.semantics import AND_TABLE, NOT_TABLE, OR_TABLE, F, T, W, max_states_default, tv_implies
from trilog.soundness import (
    SizeParams,
    UniverseConfig,
    evaluate_clause,
    build_interpretation,
    generate_program,
    generator_depth,
    verify_soundness,
)
from trilog.subtyping import subtype_trace
from trilog.typechecker import check_program
from trilog.types import DeclTable, PredicateType, show_predicate_type, show_type

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2


class _UsageError(Exception):
    pass


# --- JSON views --------------------------------------------------------------------


def term_json(t: Term):
    if isinstance(t, Var):
        return {"var": t.name}
    if isinstance(t, Const):
        return {"const": t.symbol}
    return {"functor": t.functor, "args": [term_json(a) for a in t.args]}


def goal_json(g):
    if isinstance(g, Unify):
        return {"unify": [term_json(g.left), term_json(g.right)]}
    return {"call": g.predicate, "args": [term_json(a) for a in g.args]}


def program_json(p: Program) -> dict:
    return {
        "types": [{"name": d.name, "params": list(d.params), "body": show_type(d.body)} for d in p.type_decls],
        "clauses": [
            {
                "predicate": c.head_predicate,
                "head": [term_json(a) for a in c.head_args],
                "body": [[goal_json(g) for g in seq] for seq in c.body],
            }
            for c in p.clauses
        ],
        "queries": [[goal_json(g) for g in q] for q in p.queries],
    }


def error_json(err: TrilogError) -> dict:
    out = {"kind": err.kind, "message": err.message}
    if err.span is not None:
        out["line"], out["column"] = err.span
    if isinstance(err, TypeCheckError):
        for key in ("predicate", "branch", "expected", "found"):
            value = getattr(err, key)
            if value is not None:
                out[key] = value
    return out


def _emit(args, payload, text: str) -> None:
    if args.json:
        print(json.dumps(payload, indent=2))
    elif text:
        print(text)


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise _UsageError(f"cannot read {path}: {exc.strerror}") from None


def _load(path: str) -> Program:
    return parse_program(_read(path))


def _universe(args) -> UniverseConfig:
    if getattr(args, "universe", None):
        try:
            config = UniverseConfig.from_json(_read(args.universe))
        except (ValueError, TypeError) as exc:
            raise _UsageError(f"bad universe file: {exc}") from None
    else:
        config = UniverseConfig()
    if getattr(args, "depth", None) is not None:
        config.depth = args.depth
    if getattr(args, "partition", None):
        config.partition = args.partition
    return config


# --- subcommands -------------------------------------------------------------------


def cmd_parse(args) -> int:
    p = _load(args.file)
    _emit(args, program_json(p), pretty(p).rstrip("\n"))
    return EXIT_OK


def cmd_normalize(args) -> int:
    p = normalize(_load(args.file))
    _emit(args, program_json(p), pretty(p).rstrip("\n"))
    return EXIT_OK


def cmd_check(args) -> int:
    p = _load(args.file)
    decls = DeclTable(p.type_decls)
    result = check_program(p, decls)
    lines: List[str] = []
    preds = []
    for name, r in result.predicates.items():
        entry = {"predicate": name, "ok": r.ok}
        if r.ok:
            shown = result.show_type(name)
            entry["type"] = shown
            lines.append(f"{name} : {shown}")
            if args.derivation and r.derivation is not None:
                lines.append(r.derivation.render(decls))
                entry["derivation"] = r.derivation.to_json(decls)
        else:
            entry["error"] = error_json(r.error)
            lines.append(f"{name} : error: {r.error.kind}: {r.error.message}")
        preds.append(entry)
    queries = []
    for q in result.queries:
        entry = {"query": show_seq(q.goals), "ok": q.ok}
        if q.ok:
            lines.append(f"?- {show_seq(q.goals)} : ok")
        else:
            entry["error"] = error_json(q.error)
            lines.append(f"?- {show_seq(q.goals)} : error: {q.error.kind}: {q.error.message}")
        queries.append(entry)
    _emit(args, {"ok": result.ok, "predicates": preds, "queries": queries}, "\n".join(lines))
    return EXIT_OK if result.ok else EXIT_DOMAIN


def cmd_subtype(args) -> int:
    try:
        a, b = parse_type(args.sub), parse_type(args.sup)
    except TrilogError as exc:
        raise _UsageError(f"bad type: {exc.message}") from None
    holds, trace = subtype_trace(a, b)

    def show(t):
        return show_predicate_type(t) if isinstance(t, PredicateType) else show_type(t)

    verdict = f"{show(a)} <= {show(b)}: {'true' if holds else 'false'}"
    _emit(args, {"sub": show(a), "sup": show(b), "holds": holds, "trace": trace},
          "\n".join([verdict] + (trace if args.trace else [])))
    return EXIT_OK if holds else EXIT_DOMAIN


def cmd_eval(args) -> int:
    p = _load(args.file)
    decls = DeclTable(p.type_decls)
    check = check_program(p, decls)
    interp, universe = build_interpretation(check.program, decls, _universe(args), check)
    clauses: Sequence[Clause] = check.program.clauses
    if args.predicate:
        clauses = [c for c in clauses if c.head_predicate == args.predicate]
        if not clauses:
            raise _UsageError(f"no predicate named {args.predicate}")
    summaries = [evaluate_clause(c, interp, universe, args.max_states, keep_states=args.states)
                 for c in clauses]
    lines = [f"universe: {universe.size()} values in {len(universe.domains)} domains "
             f"({universe.partition} partition, depth {universe.depth})"]
    for s in summaries:
        if args.states:
            for states, value in s.states:
                shown = " | ".join(", ".join(f"{x}={v}" for x, v in st.items()) or "-" for st in states)
                lines.append(f"{s.predicate} [{shown}] = {value}")
        lines.append(f"{s.predicate}: count_true={s.count_true} count_false={s.count_false} "
                     f"count_wrong={s.count_wrong} truncated={s.truncated}")
    payload = {"universe": {"values": universe.size(), "domains": sorted(universe.domains),
                            "partition": universe.partition, "depth": universe.depth},
               "predicates": [s.to_json(args.states) for s in summaries]}
    _emit(args, payload, "\n".join(lines))
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.file is None and args.seed is None:
        raise _UsageError("verify needs a program file or --seed")
    config = _universe(args)
    if args.file is not None:
        p = _load(args.file)
    else:
        p = generate_program(args.seed, SizeParams())
        if args.depth is None:
            config.depth = generator_depth(p)
    report = verify_soundness(p, config=config, cap=args.max_states)
    lines = [report.interpretation]
    for r in report.predicates:
        lines.append(f"{r.predicate}: {r.status} states={r.states_checked} wrong={r.wrong_count} "
                     f"truncated={r.truncation_count}")
        if r.counterexample is not None:
            lines.append(f"  counterexample: {json.dumps(r.counterexample)}")
    payload = report.to_json()
    if args.file is None:
        payload["program"] = pretty(p)
    _emit(args, payload, "\n".join(lines))
    return EXIT_OK if report.ok else EXIT_DOMAIN


def truth_tables() -> dict:
    vals = (T, F, W)
    return {
        "and": [[str(a), str(b), str(AND_TABLE[a, b])] for a in vals for b in vals],
        "or": [[str(a), str(b), str(OR_TABLE[a, b])] for a in vals for b in vals],
        "not": [[str(a), str(NOT_TABLE[a])] for a in vals],
        "implies": [[str(a), str(b), str(tv_implies(a, b))] for a in vals for b in vals],
    }


def cmd_tables(args) -> int:
    tables = truth_tables()
    lines = []
    for name in ("and", "or", "implies"):
        for a, b, r in tables[name]:
            lines.append(f"{name}({a}, {b}) = {r}")
    for a, r in tables["not"]:
        lines.append(f"not({a}) = {r}")
    _emit(args, tables, "\n".join(lines))
    return EXIT_OK


# --- argument parsing --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trilog", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, func, help_text: str, file: bool = True) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        if file:
            p.add_argument("file", help="program source ('-' for stdin)")
        p.add_argument("--json", action="store_true", help="machine-readable output")
        p.set_defaults(func=func)
        return p

    add("parse", cmd_parse, "parse and pretty-print a program")
    add("normalize", cmd_normalize, "print the normal form of a program")
    p = add("check", cmd_check, "type check a program")
    p.add_argument("--derivation", action="store_true", help="print derivation trees")
    p = add("subtype", cmd_subtype, "decide a subtype query", file=False)
    p.add_argument("sub")
    p.add_argument("sup")
    p.add_argument("--trace", action="store_true", help="print the rules used")
    p = add("eval", cmd_eval, "evaluate clauses over every state")
    p.add_argument("--universe", help="universe description (JSON)")
    p.add_argument("--partition", choices=["typed", "herbrand", "singleton"])
    p.add_argument("--depth", type=int)
    p.add_argument("--predicate")
    p.add_argument("--states", action="store_true", help="print the value under each state list")
    p.add_argument("--max-states", type=int, default=None)
    p = sub.add_parser("verify", help="check well-typed predicates never evaluate to wrong")
    p.add_argument("file", nargs="?", help="program source; omit to verify a generated program")
    p.add_argument("--json", action="store_true")
    p.add_argument("--universe", help="universe description (JSON)")
    p.add_argument("--depth", type=int, default=None, help="tree depth bound (default 3)")
    p.add_argument("--max-states", type=int, default=None)
    p.add_argument("--seed", type=int, help="verify the generated program for this seed")
    p.set_defaults(func=cmd_verify)
    add("tables", cmd_tables, "print the connective truth tables", file=False)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    if getattr(args, "max_states", None) is None and hasattr(args, "max_states"):
        args.max_states = max_states_default()
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"trilog: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TrilogError as exc:
        if args.json:
            print(json.dumps({"ok": False, "error": error_json(exc)}, indent=2))
        else:
            print(f"trilog: {exc.kind}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
