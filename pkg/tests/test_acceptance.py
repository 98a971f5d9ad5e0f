"""One PASS/FAIL line per acceptance criterion, repeated in the terminal summary."""
import random
import time
from collections import Counter

from mongolog.compiler import VARS, CompileContext, compile_query, solve, translate, user_variables
from mongolog.corpus import (
    STAGE_CASES, check_golden, check_round_trip, golden_path, load_program, query_cases,
    run_query_case, run_stage_case, stage_db, stage_expected, vars_objects,
)
from mongolog.emitter import emit, parse_emitted
from mongolog.engine import run_pipeline
from mongolog.frontend import parse_query
from mongolog.goals import goal_vars
from mongolog.optimizer import reduce_pv
from mongolog.randprog import random_case
from mongolog.values import compare_default, subtree
from checks import check_conjunctive, check_transitive, check_unify, random_unification
from oracles import closure, random_digraph, random_value


def key(solutions):
    return Counter(tuple(sorted(s.binding_text().items())) for s in solutions)


def test_criterion_1_query_corpus(acceptance_line):
    start = time.perf_counter()
    failures = [r.name for r in (run_query_case(c) for c in query_cases()) if not r.ok]
    got = {c.name: vars_objects(load_program(c), c.query) for c in query_cases()}
    elapsed = time.perf_counter() - start
    shape = {
        "conjunctive has 2 solutions": len(got["conjunctive"]) == 2,
        "reflexive has 2 solutions": len(got["reflexive"]) == 2,
        "transitive gives door1 and handle1": sorted(v["y"] for v in got["transitive"]) == ["door1", "handle1"],
        "limit gives one bird": len(got["limit"]) == 1 and got["limit"][0]["x"] in ("tweety", "tux"),
        "ignore has 2 solutions, one with y=fred": len(got["ignore"]) == 2
        and sum(v.get("y") == "fred" for v in got["ignore"]) == 1,
        "negation gives exactly tweety": got["negation"] == [{"x": "tweety"}],
        "p(X) = p(Y) fails": got["unify_no_alias"] == [],
    }
    failures += [k for k, ok in shape.items() if not ok]
    ok = not failures and elapsed < 1.0
    acceptance_line(1, ok, f"{len(query_cases())} queries exact, {elapsed:.3f}s"
                    + (f"; failed: {failures}" if failures else ""))
    assert ok


def test_criterion_2_stage_corpus(acceptance_line):
    db, expected = stage_db(), stage_expected()
    failures = [c.name for c in STAGE_CASES if not run_stage_case(c, db, expected).ok]
    sort = [d["sku"] for d in expected["a4_sort"]]
    shape = {
        "match 2": len(expected["a1_match"]) == 2,
        "unwind 2": len(expected["a2_unwind"]) == 2,
        "project 4 available": [d["available"] for d in expected["a3_project"]] == [True] * 4,
        "sort order": sort == ["cashews", "bread", "pecans", "almonds"],
        "sort+limit almonds": [d["sku"] for d in expected["a5_sort_limit"]] == ["almonds"],
        "lookup 2": len(expected["a6_lookup"]) == 2,
        "graphLookup 3 arrays": len(expected["a7_graph_lookup"]) == 3,
    }
    failures += [k for k, ok in shape.items() if not ok]
    acceptance_line(2, not failures, f"{len(STAGE_CASES)} stages exact, _id included"
                    + (f"; failed: {failures}" if failures else ""))
    assert not failures


def test_criterion_3_optimizer_equivalence(acceptance_line):
    start = time.perf_counter()
    mismatches = []
    for c in query_cases():
        program, q = load_program(c), parse_query(c.query)
        base = key(solve(q, program, 0))
        mismatches += [(c.name, o) for o in (1, 2) if key(solve(q, program, o)) != base]
    seeds = random.Random(3).sample(range(1_000_000), 250)
    for seed in seeds:
        rc = random_case(seed)
        base = key(solve(rc.query, rc.program, 0))
        mismatches += [(seed, o) for o in (1, 2) if key(solve(rc.query, rc.program, o)) != base]
    elapsed = time.perf_counter() - start
    ok = not mismatches and elapsed < 30
    acceptance_line(3, ok, f"corpus + {len(seeds)} random programs, {len(mismatches)} mismatches, "
                    f"{elapsed:.1f}s")
    assert ok


def test_criterion_4_oracles(acceptance_line):
    conj = [m for s in range(150) for o in (0, 1, 2) if (m := check_conjunctive(s, o))]
    cyclic = sum(any((b, a) in closure(e) for a, b in e)
                 for e in (random_digraph(random.Random(s))[1] for s in range(120)))
    trans = [m for s in range(120) if (m := check_transitive(s, s % 3))]
    rng = random.Random(11)
    pairs = [random_unification(rng) for _ in range(5000)]
    unif = [m for a, b in pairs if (m := check_unify(a, b))]
    ok = not (conj or trans or unif) and cyclic > 0
    acceptance_line(4, ok, f"(a) 450 conjunctive queries {len(conj)} mismatches; "
                    f"(b) 120 digraphs ({cyclic} cyclic) {len(trans)} mismatches; "
                    f"(c) {len(pairs)} unifications {len(unif)} mismatches")
    assert ok, (conj + trans + unif)[:3]


def _sign(x):
    return (x > 0) - (x < 0)


def _rank(v):
    if v is None:
        return 0
    if isinstance(v, dict):
        return 2
    if isinstance(v, list):
        return 3
    return 1


def test_criterion_5_ordering_laws(acceptance_line):
    rng = random.Random(5)
    violations = []
    for _ in range(10_000):
        a, b = random_value(rng), random_value(rng)
        ab, ba = compare_default(a, b), compare_default(b, a)
        if ab not in (-1, 0, 1) or _sign(ab) != -_sign(ba):
            violations.append(("antisymmetry/totality", a, b))
        if compare_default(a, a) != 0:
            violations.append(("reflexivity", a))
        if a is None and b is not None and ab >= 0:
            violations.append(("null lowest", a, b))
        if _rank(a) != _rank(b) and _sign(ab) != _sign(_rank(a) - _rank(b)):
            violations.append(("cross-type", a, b))
    for _ in range(10_000):
        xs = [random_value(rng) for _ in range(3)]
        for a, b, c in ((xs[i], xs[j], xs[k]) for i in range(3) for j in range(3) for k in range(3)
                        if len({i, j, k}) == 3):
            if compare_default(a, b) <= 0 and compare_default(b, c) <= 0 and compare_default(a, c) > 0:
                violations.append(("transitivity", a, b, c))
    acceptance_line(5, not violations, f"10000 pairs, 10000 triples, {len(violations)} violations")
    assert not violations, violations[:3]


GOLDEN_NAMES = ("a1_match", "a2_unwind", "a4_sort", "a5_limit", "a5_sort_limit", "a6_lookup",
                "a7_graph_lookup")


def test_criterion_6_emitter_round_trip(acceptance_line):
    failures = []
    pipelines = [c.pipeline for c in STAGE_CASES]
    failures += [c.name for c in STAGE_CASES if parse_emitted(emit(c.pipeline)) != c.pipeline]
    for c in query_cases():
        for opt in (0, 1, 2):
            pipelines.append(compile_query(parse_query(c.query), load_program(c), opt).pipeline)
            r = check_round_trip(c, opt)
            if not r.ok:
                failures.append(r.name)
    by_name = {c.name: c for c in STAGE_CASES}
    goldens = [n for n in GOLDEN_NAMES if golden_path(n).exists()]
    failures += [n for n in GOLDEN_NAMES if n not in goldens or not check_golden(by_name[n]).ok]
    acceptance_line(6, not failures, f"{len(pipelines)} pipelines round trip, {len(goldens)} goldens match"
                    + (f"; failed: {failures}" if failures else ""))
    assert not failures


def test_criterion_7_live_vars(acceptance_line):
    leaks, reduced_keys, plain_keys = [], 0, 0
    cases = [(load_program(c), parse_query(c.query)) for c in query_cases()]
    cases += [(rc.program, rc.query) for rc in map(random_case, random.Random(7).sample(range(1_000_000), 200))]
    for program, q in cases:
        live = set(user_variables(q))
        allowed = live | set(goal_vars(q))
        for t in run_pipeline(reduce_pv(q, live, program), program.db):
            names = set(subtree(t, VARS) or {})
            reduced_keys += len(names)
            if not names <= allowed:
                leaks.append((q, names - allowed))
        for t in run_pipeline(translate(q, CompileContext(program)), program.db):
            plain_keys += len(subtree(t, VARS) or {})
    acceptance_line(7, not leaks, f"{len(cases)} queries, {len(leaks)} trees with dead vars; "
                    f"vars fields {reduced_keys} reduced vs {plain_keys} unreduced")
    assert not leaks
