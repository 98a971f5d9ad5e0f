"""Command line entry point: ``mongolog {query,emit,repl,check}``.

Exit codes: 0 ok, 1 no solution (with ``--expect-some``) or failed check,
2 usage, 3 parse error, 4 compile error, 5 evaluation or store error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .compiler import Solution, compile_query, solve
from .corpus import run_all
from .emitter import emit
from .errors import MongologError
from .frontend import Program, parse_program, parse_query
from .printer import term_text
from .store import Database, load_database
from .terms import Atom, Num

EXIT_NO_SOLUTION = 1


def _add_inputs(p: argparse.ArgumentParser, query_required: bool = True) -> None:
    p.add_argument("--db", default=os.environ.get("MONGOLOG_DB"),
                   help="database directory of *.jsonl collections (default: $MONGOLOG_DB)")
    p.add_argument("--program", help="Mongolog program file (.pl)")
    if query_required:
        p.add_argument("--query", required=True, help="query text, e.g. 'hasPart(X, Y)'")
    p.add_argument("--opt", type=int, choices=(0, 1, 2), default=0,
                   help="0 none, 1 predicate + lookup elimination, 2 also vars reduction "
                        "and lookup merging")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mongolog", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    q = sub.add_parser("query", help="run a query and print its solutions")
    _add_inputs(q)
    q.add_argument("--limit", type=int, help="print at most N solutions")
    q.add_argument("--json", action="store_true", help="one JSON object per solution")
    q.add_argument("--expect-some", action="store_true",
                   help="exit with status 1 when there is no solution")

    e = sub.add_parser("emit", help="print the aggregation script for a query")
    _add_inputs(e)

    r = sub.add_parser("repl", help="interactive query prompt")
    _add_inputs(r, query_required=False)

    sub.add_parser("check", help="run the bundled golden corpus")
    return parser


def load_inputs(db_dir: Optional[str], program_file: Optional[str]) -> Program:
    db = load_database(db_dir) if db_dir else Database()
    source = Path(program_file).read_text(encoding="utf-8") if program_file else ""
    return parse_program(source).with_database(db)


def binding_json(t):
    if isinstance(t, Atom):
        return t.name
    if isinstance(t, Num):
        return t.value
    return term_text(t)


def solution_line(s: Solution, as_json: bool) -> str:
    if as_json:
        return json.dumps({k: binding_json(v) for k, v in s.bindings.items()}, sort_keys=True)
    if not s.bindings:
        return "true."
    return ", ".join(f"{k} = {term_text(v)}" for k, v in sorted(s.bindings.items())) + "."


def cmd_query(args, out) -> int:
    program = load_inputs(args.db, args.program)
    solutions = solve(parse_query(args.query), program, args.opt)
    shown = solutions if args.limit is None else solutions[: max(args.limit, 0)]
    for s in shown:
        print(solution_line(s, args.json), file=out)
    if not solutions:
        if not args.json:
            print("false.", file=out)
        if args.expect_some:
            return EXIT_NO_SOLUTION
    return 0


def cmd_emit(args, out) -> int:
    program = load_inputs(args.db, args.program)
    cq = compile_query(parse_query(args.query), program, args.opt)
    out.write(emit(cq.pipeline))
    return 0


def cmd_repl(args, out, stdin=None) -> int:
    stdin = stdin or sys.stdin
    program = load_inputs(args.db, args.program)
    print("Mongolog; end a query with '.', type ';' for more solutions, Ctrl-D to quit.", file=out)
    while True:
        out.write("?- ")
        out.flush()
        line = stdin.readline()
        if not line:
            print(file=out)
            return 0
        text = line.strip()
        if not text:
            continue
        try:
            solutions = solve(parse_query(text), program, args.opt)
        except MongologError as e:
            print(f"error: {e}", file=out)
            continue
        if not solutions:
            print("false.", file=out)
            continue
        for i, s in enumerate(solutions):
            last = i == len(solutions) - 1
            out.write(solution_line(s, False)[:-1])
            if last:
                print(".", file=out)
                break
            out.write(" ")
            out.flush()
            reply = stdin.readline()
            if reply.strip() != ";":
                print(".", file=out)
                break
            print(";", file=out)


def cmd_check(args, out) -> int:
    results = run_all()
    for r in results:
        status = "PASS" if r.ok else "FAIL"
        print(f"{status} {r.name}" + (f": {r.detail}" if r.detail else ""), file=out)
    failed = sum(not r.ok for r in results)
    print(f"{len(results) - failed}/{len(results)} passed", file=out)
    return 0 if failed == 0 else 1


COMMANDS = {"query": cmd_query, "emit": cmd_emit, "repl": cmd_repl, "check": cmd_check}


def run(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args, out)
    except MongologError as e:
        print(f"mongolog: {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"mongolog: {e}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())
