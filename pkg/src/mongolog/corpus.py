"""The bundled golden corpus: aggregation examples over plain collections and
worked Mongolog queries with their printed results.

Each case can be run on its own; ``run_all`` gives one ``CaseResult`` per case
and is what ``mongolog check`` reports.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path as FsPath
from typing import Optional

from .compiler import VARS, compile_query
from .emitter import emit, normalize_script, parse_emitted
from .engine import (
    ASC, BoolDef, Compare, Const, Eq, GraphLookup, Keep, Limit, Lookup, Match, Named, PathRef,
    Pipeline, Project, Set, Sort, TRUE_EXPR, Unwind, run_pipeline,
)
from .frontend import Program, parse_program, parse_query
from .store import Database, load_database
from .values import dumps, roots, subtree

OPT_LEVELS = (0, 1, 2)


def fixtures_dir() -> FsPath:
    return FsPath(str(resources.files("mongolog") / "fixtures"))


def db_dir(name: str) -> FsPath:
    return fixtures_dir() / "dbs" / name


def _canon(doc) -> str:
    return dumps(doc)


def same_multiset(a, b) -> bool:
    return Counter(map(_canon, a)) == Counter(map(_canon, b))


@dataclass(frozen=True)
class CaseResult:
    name: str
    ok: bool
    detail: str = ""


# -- aggregation examples -------------------------------------------------------------


@dataclass(frozen=True)
class StageCase:
    name: str
    pipeline: Pipeline
    match: str = "multiset"    # multiset | sequence | one_of
    golden: bool = True


def _p(*segments: str):
    return tuple(segments)


STAGE_CASES = (
    StageCase("a1_match", Pipeline(Named("inventory"), (
        Match(Eq(PathRef(_p("instock")), Const(80))),))),
    StageCase("a2_unwind", Pipeline(Named("events"), (Unwind(_p("tags")),))),
    StageCase("a3_project", Pipeline(Named("inventory"), (
        Project((Keep(_p("sku")),
                 Set(_p("available"), BoolDef(Compare("gt", PathRef(_p("instock")), Const(0)))))),))),
    StageCase("a4_sort", Pipeline(Named("inventory"), (
        Sort(((ASC, _p("instock")), (ASC, _p("sku")))),)), match="sequence"),
    StageCase("a5_limit", Pipeline(Named("inventory"), (Limit(1),)), match="one_of"),
    StageCase("a5_sort_limit", Pipeline(Named("inventory"), (
        Sort(((ASC, _p("_id")),)), Limit(1)))),
    StageCase("a6_lookup", Pipeline(Named("orders"), (
        Lookup(_p("a"), ((_p("v"), PathRef(_p("item"))),), Named("inventory"),
               (Match(Eq(PathRef(_p("v")), PathRef(_p("sku")))),)),))),
    StageCase("a7_graph_lookup", Pipeline(Named("ancestors"), (
        GraphLookup(_p("a"), None, TRUE_EXPR, (PathRef(_p("child")),), _p("child"),
                    _p("parent"), Named("ancestors")),))),
)


def stage_db() -> Database:
    return load_database(fixtures_dir() / "appA" / "db")


def stage_expected() -> dict:
    return json.loads((fixtures_dir() / "appA" / "expected.json").read_text(encoding="utf-8"))


def golden_path(name: str) -> FsPath:
    return fixtures_dir() / "appA" / "golden" / f"{name}.mongo.js"


def run_stage_case(case: StageCase, db: Optional[Database] = None,
                   expected: Optional[dict] = None) -> CaseResult:
    db = db or stage_db()
    want = (expected or stage_expected())[case.name]
    got = roots(run_pipeline(case.pipeline, db))
    if case.match == "sequence":
        ok = [_canon(d) for d in got] == [_canon(d) for d in want]
    elif case.match == "one_of":
        ok = len(got) == 1 and _canon(got[0]) in {_canon(d) for d in want}
    else:
        ok = same_multiset(got, want)
    return CaseResult(case.name, ok, "" if ok else f"got {dumps(got)}")


def check_golden(case: StageCase) -> CaseResult:
    name = f"{case.name}:emit"
    text = emit(case.pipeline)
    golden = golden_path(case.name).read_text(encoding="utf-8")
    if normalize_script(text) != normalize_script(golden):
        return CaseResult(name, False, f"emitted:\n{text}")
    if parse_emitted(text) != case.pipeline:
        return CaseResult(name, False, "emitted script does not read back to the pipeline")
    return CaseResult(name, True)


# -- Mongolog queries ----------------------------------------------------------------------


@dataclass(frozen=True)
class QueryCase:
    name: str
    db: Optional[str]
    program: Optional[str]
    query: str
    match: str
    expected: list = field(default_factory=list)


def query_cases() -> list[QueryCase]:
    raw = json.loads((fixtures_dir() / "appB" / "cases.json").read_text(encoding="utf-8"))
    return [QueryCase(**c) for c in raw]


def load_program(case: QueryCase) -> Program:
    src = ""
    if case.program:
        src = (fixtures_dir() / "programs" / case.program).read_text(encoding="utf-8")
    db = load_database(db_dir(case.db)) if case.db else Database()
    return parse_program(src).with_database(db)


def vars_objects(program: Program, query: str, opt: int = 0) -> list[dict]:
    """The ``vars`` object of every answer tree, with lower-cased names."""
    cq = compile_query(parse_query(query), program, opt)
    out = []
    for t in run_pipeline(cq.pipeline, program.db):
        v = subtree(t.root, VARS)
        out.append({k.lower(): x for k, x in v.items()} if isinstance(v, dict) else {})
    return out


def run_query_case(case: QueryCase, opt: int = 0) -> CaseResult:
    name = f"{case.name}@opt{opt}"
    got = vars_objects(load_program(case), case.query, opt)
    if case.match == "one_of":
        ok = any(same_multiset(got, alt) for alt in case.expected)
    else:
        ok = same_multiset(got, case.expected)
    return CaseResult(name, ok, "" if ok else f"got {dumps(got)}")


def check_round_trip(case: QueryCase, opt: int) -> CaseResult:
    name = f"{case.name}@opt{opt}:emit"
    p = compile_query(parse_query(case.query), load_program(case), opt).pipeline
    ok = parse_emitted(emit(p)) == p
    return CaseResult(name, ok, "" if ok else "emitted script does not read back to the pipeline")


def run_all() -> list[CaseResult]:
    db, expected = stage_db(), stage_expected()
    results = []
    for case in STAGE_CASES:
        results.append(run_stage_case(case, db, expected))
        if case.golden:
            results.append(check_golden(case))
    for case in query_cases():
        for opt in OPT_LEVELS:
            results.append(run_query_case(case, opt))
            results.append(check_round_trip(case, opt))
    return results
