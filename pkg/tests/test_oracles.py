from hypothesis import given
from hypothesis import strategies as st

from mongolog.terms import Atom, Compound, Var
from checks import check_conjunctive, check_transitive, check_unify, uniquely_named
from oracles import closure, conjunctive_answers, mgu, names, substitute
from strategies import constants, terms

seeds = st.integers(0, 100_000)


class TestOracles:
    def test_closure_of_cycle(self):
        assert closure([("a", "b"), ("b", "a")]) == {("a", "b"), ("b", "a"), ("a", "a"), ("b", "b")}

    def test_conjunctive_answers(self):
        facts = [Compound("q", (Atom("a"), Atom("b"))), Compound("q", (Atom("b"), Atom("c")))]
        calls = [Compound("q", (Var("X"), Var("Y"))), Compound("q", (Var("Y"), Var("Z")))]
        assert conjunctive_answers(facts, calls) == [{"X": Atom("a"), "Y": Atom("b"), "Z": Atom("c")}]

    def test_mgu_without_occurs_check(self):
        assert mgu(Var("X"), Compound("f", (Var("X"),))) == {"X": Compound("f", (Var("X"),))}


@given(seeds, st.sampled_from([0, 1, 2]))
def test_conjunctive_queries(seed, opt):
    assert check_conjunctive(seed, opt) is None


@given(seeds, st.sampled_from([0, 1, 2]))
def test_transitive_closure(seed, opt):
    assert check_transitive(seed, opt) is None


@given(terms(), terms())
def test_unify_simplified(t1, t2):
    t1 = uniquely_named(t1)
    t2 = uniquely_named(t2, iter(range(100, 200)))
    assert check_unify(t1, t2) is None


@given(terms(), st.data())
def test_unify_against_ground_instance(t, data):
    t = uniquely_named(t)
    ground = substitute(t, {n: data.draw(constants) for n in names(t)})
    assert check_unify(t, ground) is None
    assert check_unify(ground, t) is None
