import pytest
from hypothesis import assume, given

from mongolog.engine import Const, Eq, Exists, Not, TermExpr, eval_value_def
from mongolog.store import term_document
from mongolog.terms import (
    Atom, Compound, FlatTermError, IndexedVar, Num, Var, eval_fact, eval_instantiate,
    eval_subterm, flatten, instantiate, is_ground, key_tuple, unflatten, unify_simplified,
    vars_of,
)
from mongolog.values import UNDEFINED
from strategies import ground_terms, terms


def p(*args):
    return Compound("p", args)


a, b, q = Atom("a"), Atom("b"), Atom("q")
X, Y = Var("x"), Var("y")


class TestFlatten:
    def test_worked_term(self):
        t = p(a, Compound("q", (Num(2),)))
        assert flatten(t) == [
            {"k": "0", "v": "p"}, {"k": "1", "v": "a"}, {"k": "2.0", "v": "q"}, {"k": "2.1", "v": 2},
        ]

    def test_binding_instantiates(self):
        assert flatten(p(X), ("vars",), "", {"vars": {"x": 2}}) == [
            {"k": "0", "v": "p"}, {"k": "1", "v": 2},
        ]

    def test_bare_variable(self):
        assert flatten(X, ("vars",)) == [{"k": "0", "n": "x"}]

    def test_compound_binding_splices(self):
        bound = [{"k": "0", "v": "q"}, {"k": "1", "v": 3}]
        assert flatten(p(X), ("vars",), "", {"vars": {"x": bound}}) == [
            {"k": "0", "v": "p"}, {"k": "1.0", "v": "q"}, {"k": "1.1", "v": 3},
        ]

    @given(terms())
    def test_keys_increase(self, t):
        keys = [key_tuple(e["k"]) for e in flatten(t)]
        assert keys == sorted(keys) and len(set(keys)) == len(keys)


class TestUnflatten:
    def test_worked_example(self):
        assert unflatten([{"k": "0", "v": "p"}, {"k": "1", "v": "q"}]) == p(q)

    def test_mixed(self):
        elems = [{"k": "0", "v": "f"}, {"k": "1", "n": "x"}, {"k": "2", "v": 3}]
        assert unflatten(elems) == Compound("f", (X, Num(3)))

    def test_round_trip_ground(self):
        t = p(a, Compound("q", (Num(2),)))
        assert unflatten(flatten(t)) == t

    def test_missing_functor(self):
        with pytest.raises(FlatTermError):
            unflatten([{"k": "1", "v": "a"}])

    def test_gap(self):
        with pytest.raises(FlatTermError):
            unflatten([{"k": "0", "v": "p"}, {"k": "2", "v": "a"}])

    def test_empty_root_key_accepted(self):
        assert unflatten([{"k": "", "v": "c"}]) == Atom("c")

    @given(terms())
    def test_round_trip(self, t):
        assert unflatten(flatten(t)) == t


class TestVars:
    def test_worked_example(self):
        assert vars_of(p(X)) == {IndexedVar("x", "1")}

    def test_ground(self):
        assert vars_of(p(a)) == set()

    def test_nested(self):
        t = Compound("f", (X, Compound("g", (Y,))))
        assert vars_of(t) == {IndexedVar("x", "1"), IndexedVar("y", "2.1")}


class TestTermExpression:
    def test_worked_example(self):
        assert eval_value_def(TermExpr(p(X), ()), {"x": 2}) == [
            {"k": "0", "v": "p"}, {"k": "1", "v": 2},
        ]

    def test_false_filter(self):
        assert eval_value_def(TermExpr(p(X), (), Eq(Const(1), Const(0))), {}) == []

    def test_variables_only(self):
        d = TermExpr(p(X), ("vars",), Not(Exists(("v",))))
        assert eval_value_def(d, {"vars": {}}) == [{"k": "1", "n": "x"}]

    @given(ground_terms)
    def test_ground_term_matches_fact(self, t):
        assume(isinstance(t, Compound))
        assert eval_value_def(TermExpr(t, ()), {}) == eval_fact((), term_document(t, 1))


class TestSubterm:
    tree = {"a": [{"k": "0", "v": "p"}, {"k": "1.0", "v": "q"}, {"k": "1.1", "v": 3}]}

    def test_worked_example(self):
        assert eval_subterm(("a",), "1", self.tree) == [{"k": "0", "v": "q"}, {"k": "1", "v": 3}]

    def test_no_match(self):
        assert eval_subterm(("a",), "9", self.tree) is UNDEFINED

    def test_atomic(self):
        assert eval_subterm(("a",), "0", {"a": [{"k": "0", "v": "c"}]}) == [{"k": "0", "v": "c"}]

    def test_unwrap_constant(self):
        assert eval_subterm(("a",), "1.1", self.tree, unwrap=True) == 3


class TestInstantiate:
    left = [{"k": "0", "v": "p"}, {"k": "1", "n": "x"}]

    def test_worked_example(self):
        right = [{"k": "0", "v": "p"}, {"k": "1", "v": "q"}]
        tree = {"a": self.left, "b": right}
        assert eval_instantiate(("a",), ("b",), tree) == right

    def test_ground_left(self):
        ground = [{"k": "0", "v": "p"}, {"k": "1", "v": "a"}]
        assert eval_instantiate(("a",), ("b",), {"a": ground, "b": self.left}) == ground

    def test_variable_to_compound(self):
        right = [{"k": "0", "v": "p"}, {"k": "1.0", "v": "q"}, {"k": "1.1", "v": 3}]
        got = eval_instantiate(("a",), ("b",), {"a": self.left, "b": right})
        assert unflatten(got) == p(Compound("q", (Num(3),)))

    @given(terms(), ground_terms)
    def test_idempotent_with_ground_right(self, t1, t2):
        left, right = flatten(t1), flatten(t2)
        once = instantiate(left, right)
        assert instantiate(once, right) == once


class TestFact:
    def test_worked_example(self):
        assert eval_fact((), {"0": "a"}) == [{"k": "0", "v": "a"}]

    def test_id_excluded(self):
        assert eval_fact((), {"_id": 7, "0": "p", "1": "a"}) == [
            {"k": "0", "v": "p"}, {"k": "1", "v": "a"},
        ]

    def test_empty(self):
        assert eval_fact(("q",), {"q": {}}) == []

    def test_non_object(self):
        assert eval_fact(("q",), {"q": 3}) is UNDEFINED


class TestUnifySimplified:
    def test_worked_bindings(self):
        assert unify_simplified(Compound("p", (X, Num(1))), Compound("p", (Num(2), Y))) == {
            "x": 2, "y": 1,
        }

    def test_constants(self):
        assert unify_simplified(Num(2), Num(2)) == {}

    def test_no_aliasing(self):
        assert unify_simplified(p(X), p(Y)) is None

    def test_clash(self):
        assert unify_simplified(p(a), p(b)) is None

    def test_existing_binding(self):
        assert unify_simplified(p(X), p(a), {"x": "b"}) is None
        assert unify_simplified(p(X), p(a), {"x": "a"}) == {"x": "a"}

    def test_arity_clash(self):
        assert unify_simplified(Compound("f", (a,)), Compound("f", (a, X))) is None
        assert unify_simplified(Compound("f", (X, Y)), Compound("f", (a,))) is None

    def test_repeated_variable(self):
        assert unify_simplified(Compound("f", (X, X)), Compound("f", (a, b))) is None
        assert unify_simplified(Compound("f", (X, X)), Compound("f", (a, a))) == {"x": "a"}

    @given(terms(), terms())
    def test_symmetric(self, t1, t2):
        assert (unify_simplified(t1, t2) is None) == (unify_simplified(t2, t1) is None)

    @given(ground_terms)
    def test_ground_self(self, t):
        assert is_ground(t)
        assert unify_simplified(t, t) == {}
