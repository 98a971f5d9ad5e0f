import random
from functools import cmp_to_key

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mongolog.corpus import STAGE_CASES, run_stage_case, stage_db
from mongolog.engine import (
    ASC, DESC, ONE, And, ArrayDef, BoolDef, Compare, Cond, Const, Eq, Exists, GraphLookup,
    Keep, Limit, Lookup, Match, Named, Not, Or, PathRef, Pipeline, Project, Set, Sort,
    SortKeyExpr, SubsetEq, TRUE_EXPR, Unwind, UnwindPreserve, eval_bool, eval_value_def,
    run_pipeline, run_stage,
)
from mongolog.errors import ResolutionError
from mongolog.store import Database
from mongolog.values import Tree, compare_sort_labels, forest, roots
from oracles import closure, random_digraph
from strategies import json_values


def P(text):
    return tuple(text.split(".")) if text else ()


@pytest.fixture(scope="module")
def inventory():
    return forest(stage_db().collection("inventory"))


class TestValueDefinitions:
    def test_const(self):
        assert eval_value_def(Const(5), {"a": 1}) == 5

    def test_cond(self):
        assert eval_value_def(Cond(Exists(P("a")), Const(1), Const(2)), {"a": 7}) == 1
        assert eval_value_def(Cond(Exists(P("a")), Const(1), Const(2)), {}) == 2

    def test_array(self):
        assert eval_value_def(ArrayDef((PathRef(P("x")), Const(0))), {"x": 3}) == [3, 0]

    def test_bool(self):
        assert eval_value_def(BoolDef(Compare("gt", PathRef(P("n")), Const(0))), {"n": 4}) is True

    def test_sort_key(self):
        assert eval_value_def(SortKeyExpr(ASC, P("n")), {"n": 4}) == {ASC: 4}


class TestBool:
    def test_eq(self):
        assert eval_bool(Eq(PathRef(P("instock")), Const(80)), {"instock": 80})

    def test_exists(self):
        assert not eval_bool(Exists(P("a")), {})

    def test_subset(self):
        left = Const([{"k": "0", "v": "p"}])
        right = Const([{"k": "0", "v": "p"}, {"k": "1", "v": "a"}])
        assert eval_bool(SubsetEq(left, right), {})
        assert not eval_bool(SubsetEq(right, left), {})

    def test_undefined_never_equal(self):
        assert not eval_bool(Eq(PathRef(P("a")), PathRef(P("b"))), {})

    def test_connectives(self):
        t, f = TRUE_EXPR, Not(TRUE_EXPR)
        assert eval_bool(And((t, t)), {}) and not eval_bool(And((t, f)), {})
        assert eval_bool(Or((f, t)), {}) and not eval_bool(Or((f, f)), {})


class TestStages:
    def test_match(self, inventory):
        out = run_stage(Match(Eq(PathRef(P("instock")), Const(80))), inventory)
        assert [t.root["sku"] for t in out] == ["bread", "pecans"]

    def test_limit_zero(self, inventory):
        assert run_stage(Limit(0), inventory) == []

    def test_unwind(self):
        out = run_stage(Unwind(P("tags")), forest([{"_id": 1, "tags": ["work", "sports"]}]))
        assert roots(out) == [{"_id": 1, "tags": "work"}, {"_id": 1, "tags": "sports"}]

    def test_unwind_scalar_passes(self):
        assert roots(run_stage(Unwind(P("a")), forest([{"a": 3}]))) == [{"a": 3}]

    def test_unwind_drops_empty(self):
        assert run_stage(Unwind(P("a")), forest([{"a": []}, {"a": None}, {}])) == []

    def test_unwind_preserve(self):
        f = forest([{"a": []}, {"a": None}, {}, {"a": [1, 2]}])
        assert roots(run_stage(UnwindPreserve(P("a")), f)) == [
            {"a": []}, {"a": None}, {}, {"a": 1}, {"a": 2},
        ]

    def test_project_omits_undefined(self):
        out = run_stage(Project((Keep(P("a")), Set(P("b"), PathRef(P("zz"))))), forest([{"_id": 1, "a": 1}]))
        assert roots(out) == [{"_id": 1, "a": 1}]

    def test_project_keeps_labels(self):
        t = Tree({"_id": 1, "a": 1}, ((ASC, 1),))
        assert run_stage(Project((Keep(P("a")),)), [t])[0].sort_label == ((ASC, 1),)

    def test_sort_then_limit(self, inventory):
        out = run_pipeline(Pipeline(Named("inventory"), (
            Sort(((ASC, P("instock")), (ASC, P("sku")))), Limit(1))), stage_db())
        assert roots(out) == [{"_id": 3, "sku": "cashews", "instock": 60}]

    def test_sort_descending(self, inventory):
        out = run_stage(Sort(((DESC, P("instock")),)), inventory)
        assert out[0].root["sku"] == "almonds"

    def test_lookup(self):
        db = stage_db()
        stage = Lookup(P("a"), ((P("v"), PathRef(P("item"))),), Named("inventory"),
                       (Match(Eq(PathRef(P("v")), PathRef(P("sku")))),))
        out = run_stage(stage, forest(db.collection("orders")), db)
        assert [[d["sku"] for d in t.root["a"]] for t in out] == [["almonds"], ["pecans"]]

    def test_lookup_with_projection_keeps_injected_fields(self):
        db = Database({"c": [{"_id": 1, "x": 1}]})
        stage = Lookup(P("a"), ((P("v"), Const(9)),), Named("c"), (Project((Keep(P("v")),)),))
        assert run_stage(stage, forest([{"_id": 5}]), db)[0].root["a"] == [{"_id": 1, "v": 9}]

    def test_unknown_collection(self):
        with pytest.raises(ResolutionError):
            run_pipeline(Pipeline(Named("nope")), Database())

    def test_c_one(self):
        assert roots(run_pipeline(Pipeline(ONE), Database())) == [{"_id": 1}]
        assert run_pipeline(Pipeline(ONE, (Match(Not(TRUE_EXPR)),)), Database()) == []

    def test_graph_lookup_depth(self):
        db = Database({"e": [{"_id": 1, "f": "a", "t": "b"}, {"_id": 2, "f": "b", "t": "c"}]})
        stage = GraphLookup(P("r"), P("d"), TRUE_EXPR, (Const("a"),), P("f"), P("t"), Named("e"))
        out = run_stage(stage, forest([{"_id": 1}]), db)
        assert [(d["_id"], d["d"]) for d in out[0].root["r"]] == [(1, 1), (2, 2)]

    def test_graph_lookup_max_depth(self):
        db = Database({"e": [{"_id": i, "f": i, "t": i + 1} for i in range(5)]})
        stage = GraphLookup(P("r"), None, TRUE_EXPR, (Const(0),), P("f"), P("t"), Named("e"), 1)
        out = run_stage(stage, forest([{"_id": 1}]), db)
        assert [d["_id"] for d in out[0].root["r"]] == [0, 1]


@pytest.mark.parametrize("case", STAGE_CASES, ids=lambda c: c.name)
def test_stage_corpus(case):
    result = run_stage_case(case)
    assert result.ok, result.detail


class TestInvariants:
    forests = st.lists(st.dictionaries(st.sampled_from("abc"), json_values, max_size=3), max_size=6)

    @given(forests, st.integers(0, 8))
    def test_cardinalities(self, docs, k):
        f = forest(docs)
        assert len(run_stage(Match(Exists(P("a"))), f)) <= len(f)
        assert len(run_stage(Limit(k), f)) == min(k, len(f))
        assert len(run_stage(Sort(((ASC, P("a")),)), f)) == len(f)
        db = Database({"c": [{"_id": 1}, {"_id": 2}]})
        assert len(run_stage(Lookup(P("x"), (), Named("c"), ()), f, db)) == len(f)

    @given(forests)
    def test_unwind_preserve_extends_unwind(self, docs):
        f = forest(docs)
        for t in f:
            plain = run_stage(Unwind(P("a")), [t])
            kept = run_stage(UnwindPreserve(P("a")), [t])
            assert kept == (plain or [t])

    @given(forests, st.integers(0, 6))
    def test_sort_limit_gives_minima(self, docs, k):
        f = forest(docs)
        keys = ((ASC, P("a")), (DESC, P("b")))
        got = run_stage(Limit(k), run_stage(Sort(keys), f))
        everything = sorted(run_stage(Sort(keys), f), key=lambda t: cmp_to_key(compare_sort_labels)(t.sort_label))
        assert [t.sort_label for t in got] == [t.sort_label for t in everything[:k]]

    @given(forests)
    def test_deterministic(self, docs):
        db = Database({"c": [{"_id": i, "a": i % 2} for i in range(4)]})
        p = Pipeline(Named("c"), (Sort(((ASC, P("a")),)), Limit(3),
                                  Lookup(P("x"), ((P("v"), PathRef(P("a"))),), Named("c"),
                                         (Match(Eq(PathRef(P("v")), PathRef(P("a")))),))))
        assert run_pipeline(p, db) == run_pipeline(p, db)


def test_graph_lookup_matches_closure():
    rng = random.Random(7)
    for _ in range(200):
        labels, edges = random_digraph(rng)
        docs = [{"_id": i, "f": s, "t": t} for i, (s, t) in enumerate(edges, 1)]
        db = Database({"e": docs})
        reach = closure(edges)
        for start in labels:
            stage = GraphLookup(P("r"), None, TRUE_EXPR, (Const(start),), P("f"), P("t"), Named("e"))
            found = run_stage(stage, forest([{"_id": 0}]), db)[0].root["r"]
            targets = {d["t"] for d in found}
            assert targets == {y for x, y in reach if x == start}
