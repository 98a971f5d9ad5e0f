import pytest
from hypothesis import given
from hypothesis import strategies as st

from mongolog.compiler import compile_query
from mongolog.corpus import (
    STAGE_CASES, check_golden, check_round_trip, golden_path, load_program, query_cases,
)
from mongolog.emitter import APPROXIMATE, EmitError, emit, normalize_script, parse_emitted, tokenize_js
from mongolog.engine import (
    ASC, DESC, ONE, Compare, Const, Eq, Exists, Keep, Limit, Match, Named, Not, Or, PathRef,
    Pipeline, Project, Set, Sort, Unwind, UnwindPreserve,
)
from mongolog.frontend import parse_query
from mongolog.randprog import random_case

GOLDEN = [c for c in STAGE_CASES if c.golden]


@pytest.mark.parametrize("case", GOLDEN, ids=lambda c: c.name)
def test_golden(case):
    result = check_golden(case)
    assert result.ok, result.detail


@pytest.mark.parametrize("case", STAGE_CASES, ids=lambda c: c.name)
def test_stage_round_trip(case):
    assert parse_emitted(emit(case.pipeline)) == case.pipeline


@pytest.mark.parametrize("opt", [0, 1, 2])
@pytest.mark.parametrize("case", query_cases(), ids=lambda c: c.name)
def test_corpus_round_trip(case, opt):
    result = check_round_trip(case, opt)
    assert result.ok, result.detail


def test_golden_unwind_reads_back():
    p = parse_emitted(golden_path("a2_unwind").read_text(encoding="utf-8"))
    assert p == Pipeline(Named("events"), (Unwind(("tags",)),))


def test_empty_pipeline():
    assert emit(Pipeline(Named("c"))) == "db.c.aggregate([])\n"
    assert parse_emitted(emit(Pipeline(ONE))) == Pipeline(ONE)


def test_unsupported_stage():
    with pytest.raises(EmitError, match="facet"):
        parse_emitted("db.c.aggregate([{ $facet: {} }])")


def test_normalize_ignores_layout_and_comments():
    a = "db.c.aggregate([{ $limit: 1 }])"
    b = "// note\ndb.c.aggregate([\n  {\n    $limit : 1\n  }\n])\n"
    assert normalize_script(a) == normalize_script(b)


def test_term_expressions_flagged_approximate():
    case = next(c for c in query_cases() if c.name == "conjunctive")
    text = emit(compile_query(parse_query(case.query), load_program(case)).pipeline)
    assert text.startswith(APPROXIMATE)
    assert tokenize_js(text)


fields = st.sampled_from(["a", "b", "c.d", "vars.X"]).map(lambda s: tuple(s.split(".")))
consts = st.one_of(st.integers(-3, 3), st.sampled_from(["x", "y"]), st.booleans()).map(Const)
conds = st.recursive(
    st.one_of(fields.map(Exists),
              st.builds(Eq, fields.map(PathRef), consts),
              st.builds(Compare, st.sampled_from(["gt", "lte"]), fields.map(PathRef), consts)),
    lambda c: st.one_of(c.map(Not), st.lists(c, min_size=2, max_size=3).map(lambda xs: Or(tuple(xs)))),
    max_leaves=4)
stages = st.one_of(
    conds.map(Match),
    st.integers(0, 5).map(Limit),
    fields.map(Unwind),
    fields.map(UnwindPreserve),
    st.lists(st.tuples(st.sampled_from([ASC, DESC]), fields), min_size=1, max_size=2,
             unique_by=lambda k: k[1]).map(lambda ks: Sort(tuple(ks))),
    st.builds(lambda k, s, v: Project((Keep(k), Set(s, v))), fields.filter(lambda p: p[0] != "c"),
              st.just(("c", "e")), consts),
)


@given(st.lists(stages, max_size=5))
def test_round_trip_random_stages(xs):
    p = Pipeline(Named("c"), tuple(xs))
    assert parse_emitted(emit(p)) == p


@given(st.integers(0, 10_000), st.sampled_from([0, 1, 2]))
def test_round_trip_random_programs(seed, opt):
    case = random_case(seed)
    p = compile_query(case.query, case.program, opt).pipeline
    assert parse_emitted(emit(p)) == p
