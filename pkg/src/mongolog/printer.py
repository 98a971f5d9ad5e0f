"""Prolog-syntax rendering of terms and goals.

Goals print fully parenthesised so that parsing the text gives back the
same AST; terms print in canonical functional notation.
"""
from __future__ import annotations

import re

from .goals import (
    Call, Conj, Disj, EqG, FalseG, GroundG, IfThen, IfThenElse, Ignore, LimitG, Neg,
    NeqG, NonvarG, Once, Transitive, TrueG, Unify, VarG,
)
from .terms import Atom, Compound, Num, Var

_PLAIN_ATOM = re.compile(r"^[a-z][A-Za-z0-9_]*$")


def atom_text(name: str) -> str:
    if _PLAIN_ATOM.match(name):
        return name
    escaped = name.replace("\\", "\\\\").replace("'", "\\'")
    return f"'{escaped}'"


def number_text(value) -> str:
    return repr(value)


def term_text(t) -> str:
    if isinstance(t, Atom):
        return atom_text(t.name)
    if isinstance(t, Num):
        return number_text(t.value)
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Compound):
        return f"{atom_text(t.functor)}({', '.join(term_text(a) for a in t.args)})"
    raise TypeError(f"not a term: {t!r}")


def _branch_text(g, last: bool) -> str:
    # "(C -> T) ; E" always reads as if-then-else, so a plain if-then
    # branch is shielded by a trivial conjunction
    if isinstance(g, IfThen) and not last:
        return f"({goal_text(g)}, true)"
    return goal_text(g)


def goal_text(g) -> str:
    if isinstance(g, Call):
        return term_text(g.term)
    if isinstance(g, TrueG):
        return "true"
    if isinstance(g, FalseG):
        return "false"
    if isinstance(g, Conj):
        return "(" + ", ".join(goal_text(s) for s in g.goals) + ")"
    if isinstance(g, Disj):
        return "(" + " ; ".join(_branch_text(s, i == len(g.goals) - 1)
                                for i, s in enumerate(g.goals)) + ")"
    if isinstance(g, IfThen):
        return f"({goal_text(g.cond)} -> {goal_text(g.then)})"
    if isinstance(g, IfThenElse):
        return f"({goal_text(g.cond)} -> {goal_text(g.then)} ; {goal_text(g.else_)})"
    if isinstance(g, Neg):
        return f"\\+ ({goal_text(g.goal)})"
    if isinstance(g, LimitG):
        return f"limit({goal_text(g.goal)}, {g.k})"
    if isinstance(g, Once):
        return f"once({goal_text(g.goal)})"
    if isinstance(g, Ignore):
        return f"ignore({goal_text(g.goal)})"
    if isinstance(g, Unify):
        return f"({term_text(g.left)} = {term_text(g.right)})"
    if isinstance(g, EqG):
        return f"({term_text(g.left)} == {term_text(g.right)})"
    if isinstance(g, NeqG):
        return f"({term_text(g.left)} \\== {term_text(g.right)})"
    if isinstance(g, VarG):
        return f"var({term_text(g.term)})"
    if isinstance(g, NonvarG):
        return f"nonvar({term_text(g.term)})"
    if isinstance(g, GroundG):
        return f"ground({term_text(g.term)})"
    if isinstance(g, Transitive):
        return f"transitive({atom_text(g.pred)}({term_text(g.left)}, {term_text(g.right)}))"
    raise TypeError(f"not a goal: {g!r}")


def clause_text(clause) -> str:
    if isinstance(clause.body, TrueG):
        return term_text(clause.head) + "."
    return f"{term_text(clause.head)} :- {goal_text(clause.body)}."
