"""Goal AST for Mongolog queries and clause bodies."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Union

from .terms import Atom, Compound, Num, Term, Var, term_vars


@dataclass(frozen=True)
class Call:
    term: Term


@dataclass(frozen=True)
class TrueG:
    pass


@dataclass(frozen=True)
class FalseG:
    pass


TRUE = TrueG()
FALSE = FalseG()


@dataclass(frozen=True)
class Conj:
    goals: tuple


@dataclass(frozen=True)
class Disj:
    goals: tuple


@dataclass(frozen=True)
class IfThen:
    cond: "Goal"
    then: "Goal"


@dataclass(frozen=True)
class IfThenElse:
    cond: "Goal"
    then: "Goal"
    else_: "Goal"


@dataclass(frozen=True)
class Neg:
    goal: "Goal"


@dataclass(frozen=True)
class LimitG:
    goal: "Goal"
    k: int


@dataclass(frozen=True)
class Once:
    goal: "Goal"


@dataclass(frozen=True)
class Ignore:
    goal: "Goal"


@dataclass(frozen=True)
class Unify:
    left: Term
    right: Term


@dataclass(frozen=True)
class EqG:
    left: Term
    right: Term


@dataclass(frozen=True)
class NeqG:
    left: Term
    right: Term


@dataclass(frozen=True)
class VarG:
    term: Term


@dataclass(frozen=True)
class NonvarG:
    term: Term


@dataclass(frozen=True)
class GroundG:
    term: Term


@dataclass(frozen=True)
class Transitive:
    pred: str
    left: Term
    right: Term


Goal = Union[Call, TrueG, FalseG, Conj, Disj, IfThen, IfThenElse, Neg, LimitG, Once,
             Ignore, Unify, EqG, NeqG, VarG, NonvarG, GroundG, Transitive]

_WRAPPERS = (Neg, Once, Ignore)
_BINARY = (Unify, EqG, NeqG)
_CHECKS = (VarG, NonvarG, GroundG)


def subgoals(g: Goal) -> tuple:
    if isinstance(g, (Conj, Disj)):
        return g.goals
    if isinstance(g, IfThen):
        return (g.cond, g.then)
    if isinstance(g, IfThenElse):
        return (g.cond, g.then, g.else_)
    if isinstance(g, (Neg, Once, Ignore, LimitG)):
        return (g.goal,)
    return ()


def goal_terms(g: Goal) -> Iterator[Term]:
    """Terms appearing directly or nested in ``g``, left to right."""
    if isinstance(g, Call):
        yield g.term
    elif isinstance(g, _BINARY) or isinstance(g, Transitive):
        yield g.left
        yield g.right
    elif isinstance(g, _CHECKS):
        yield g.term
    for s in subgoals(g):
        yield from goal_terms(s)


def goal_vars(g: Goal) -> list[str]:
    seen: dict[str, None] = {}
    for t in goal_terms(g):
        for v in term_vars(t):
            seen.setdefault(v)
    return list(seen)


def conj(goals) -> Goal:
    goals = tuple(goals)
    if not goals:
        return TRUE
    if len(goals) == 1:
        return goals[0]
    return Conj(goals)


def rename_goal(g: Goal, f) -> Goal:
    """Apply ``f`` to every variable name in ``g``."""
    from .terms import rename_term
    rt = lambda t: rename_term(t, f)  # noqa: E731
    if isinstance(g, Call):
        return Call(rt(g.term))
    if isinstance(g, (Conj, Disj)):
        return type(g)(tuple(rename_goal(s, f) for s in g.goals))
    if isinstance(g, IfThen):
        return IfThen(rename_goal(g.cond, f), rename_goal(g.then, f))
    if isinstance(g, IfThenElse):
        return IfThenElse(rename_goal(g.cond, f), rename_goal(g.then, f), rename_goal(g.else_, f))
    if isinstance(g, _WRAPPERS):
        return type(g)(rename_goal(g.goal, f))
    if isinstance(g, LimitG):
        return LimitG(rename_goal(g.goal, f), g.k)
    if isinstance(g, _BINARY):
        return type(g)(rt(g.left), rt(g.right))
    if isinstance(g, _CHECKS):
        return type(g)(rt(g.term))
    if isinstance(g, Transitive):
        return Transitive(g.pred, rt(g.left), rt(g.right))
    return g


def goal_to_term(g: Goal) -> Term:
    """The Prolog term spelling of a goal (used to instantiate answers)."""
    c = lambda name, *args: Compound(name, tuple(args))  # noqa: E731
    if isinstance(g, Call):
        return g.term
    if isinstance(g, TrueG):
        return Atom("true")
    if isinstance(g, FalseG):
        return Atom("false")
    if isinstance(g, (Conj, Disj)):
        op = "," if isinstance(g, Conj) else ";"
        items = [goal_to_term(s) for s in g.goals]
        out = items[-1]
        for t in reversed(items[:-1]):
            out = c(op, t, out)
        return out
    if isinstance(g, IfThen):
        return c("->", goal_to_term(g.cond), goal_to_term(g.then))
    if isinstance(g, IfThenElse):
        return c(";", c("->", goal_to_term(g.cond), goal_to_term(g.then)), goal_to_term(g.else_))
    if isinstance(g, Neg):
        return c("\\+", goal_to_term(g.goal))
    if isinstance(g, LimitG):
        return c("limit", goal_to_term(g.goal), Num(g.k))
    if isinstance(g, Once):
        return c("once", goal_to_term(g.goal))
    if isinstance(g, Ignore):
        return c("ignore", goal_to_term(g.goal))
    if isinstance(g, Unify):
        return c("=", g.left, g.right)
    if isinstance(g, EqG):
        return c("==", g.left, g.right)
    if isinstance(g, NeqG):
        return c("\\==", g.left, g.right)
    if isinstance(g, VarG):
        return c("var", g.term)
    if isinstance(g, NonvarG):
        return c("nonvar", g.term)
    if isinstance(g, GroundG):
        return c("ground", g.term)
    if isinstance(g, Transitive):
        return c("transitive", c(g.pred, g.left, g.right))
    raise TypeError(f"not a goal: {g!r}")


def predicate_key(t: Term) -> tuple[str, int]:
    if isinstance(t, Atom):
        return (t.name, 0)
    if isinstance(t, Compound):
        return (t.functor, len(t.args))
    raise TypeError(f"{t!r} has no predicate symbol")


def called_predicates(g: Goal) -> Iterator[tuple[str, int]]:
    if isinstance(g, Call):
        yield predicate_key(g.term)
    for s in subgoals(g):
        yield from called_predicates(s)


__all__ = [
    "Call", "TrueG", "FalseG", "TRUE", "FALSE", "Conj", "Disj", "IfThen", "IfThenElse",
    "Neg", "LimitG", "Once", "Ignore", "Unify", "EqG", "NeqG", "VarG", "NonvarG",
    "GroundG", "Transitive", "Goal", "goal_vars", "goal_terms", "subgoals", "conj",
    "rename_goal", "goal_to_term", "predicate_key", "called_predicates", "Var",
]
