"""Random small Mongolog programs, for equivalence and oracle testing.

Programs are recursion-free by construction: a rule may only call EDB
predicates and rules defined before it.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from .frontend import Clause, Program, collection_name
from .goals import (
    FALSE, TRUE, Call, Disj, EqG, GroundG, IfThen, IfThenElse, Ignore, LimitG, Neg,
    NeqG, NonvarG, Once, Transitive, Unify, VarG, conj,
)
from .store import Database
from .terms import Atom, Compound, Num, Term, Var

CONSTANTS = (Atom("a"), Atom("b"), Atom("c"), Num(1), Num(2))


@dataclass(frozen=True)
class GenConfig:
    max_edb_facts: int = 20
    max_clauses: int = 4
    max_arity: int = 3
    max_depth: int = 2
    query_goals: tuple = (1, 3)


@dataclass
class RandomCase:
    program: Program
    query: object
    seed: int
    source: str = field(default="")


def _term(rng: random.Random, names, depth: int = 0) -> Term:
    r = rng.random()
    if r < 0.65:
        return Var(rng.choice(names))
    if r < 0.95 or depth > 0:
        return rng.choice(CONSTANTS[:3]) if rng.random() < 0.8 else rng.choice(CONSTANTS)
    return Compound("f", (_term(rng, names, depth + 1),))


def _call(rng, preds, names) -> Call:
    name, arity = rng.choice(preds)
    if arity == 0:
        return Call(Atom(name))
    return Call(Compound(name, tuple(_term(rng, names) for _ in range(arity))))


def random_goal(rng: random.Random, preds, names, binary_edb, depth: int) -> object:
    leaf = depth <= 0
    kinds = ["call"] * 8 + ["unify", "eq", "neq", "typecheck", "const"]
    if binary_edb:
        kinds.append("transitive")
    if not leaf:
        kinds += ["conj"] * 3 + ["disj"] * 2 + ["neg", "ite", "ifthen", "limit", "once", "ignore"]
    kind = rng.choice(kinds)
    sub = lambda: random_goal(rng, preds, names, binary_edb, depth - 1)  # noqa: E731
    if kind == "call":
        return _call(rng, preds, names)
    if kind == "unify":
        return Unify(_term(rng, names), _term(rng, names))
    if kind == "eq":
        return EqG(_term(rng, names), _term(rng, names))
    if kind == "neq":
        return NeqG(_term(rng, names), _term(rng, names))
    if kind == "typecheck":
        return rng.choice((VarG, NonvarG, GroundG))(_term(rng, names))
    if kind == "const":
        return TRUE if rng.random() < 0.7 else FALSE
    if kind == "transitive":
        arg = lambda: Var(rng.choice(names)) if rng.random() < 0.6 else rng.choice(CONSTANTS[:3])  # noqa: E731
        return Transitive(rng.choice(binary_edb), arg(), arg())
    if kind == "conj":
        return conj([sub() for _ in range(rng.randint(2, 3))])
    if kind == "disj":
        return Disj(tuple(sub() for _ in range(rng.randint(2, 3))))
    if kind == "neg":
        return Neg(sub())
    if kind == "ite":
        return IfThenElse(sub(), sub(), sub())
    if kind == "ifthen":
        return IfThen(sub(), sub())
    if kind == "limit":
        return LimitG(sub(), rng.randint(0, 2))
    if kind == "once":
        return Once(sub())
    return Ignore(sub())


def random_edb(rng: random.Random, cfg: GenConfig) -> tuple[Database, list]:
    preds = []
    for i in range(rng.randint(1, 3)):
        preds.append((f"e{i}", rng.randint(1, cfg.max_arity)))
    db = Database()
    for key in preds:
        db = db.ensure(collection_name(key))
    seen = set()
    for _ in range(rng.randint(cfg.max_edb_facts // 4, cfg.max_edb_facts)):
        name, arity = rng.choice(preds)
        fact = Compound(name, tuple(rng.choice(CONSTANTS[:3]) if rng.random() < 0.8
                                    else rng.choice(CONSTANTS) for _ in range(arity)))
        if fact not in seen:
            seen.add(fact)
            db = db.insert_fact(fact)
    return db, preds


def random_case(seed: int, cfg: GenConfig = GenConfig()) -> RandomCase:
    rng = random.Random(seed)
    db, edb = random_edb(rng, cfg)
    binary = [n for n, a in edb if a == 2]
    clauses: dict = {}
    callable_ = list(edb)
    n_clauses = rng.randint(0, cfg.max_clauses)
    n_preds = min(n_clauses, rng.randint(1, 2)) if n_clauses else 0
    names_local = ["A", "B", "C"]
    for j in range(n_preds):
        key = (f"q{j}", rng.randint(1, cfg.max_arity))
        count = 1 if j < n_preds - 1 else n_clauses - sum(len(v) for v in clauses.values())
        count = max(1, count)
        for c in range(count):
            prefix = f"_c{j}{c}_"
            names = [prefix + n for n in names_local]
            head = Compound(key[0], tuple(_term(rng, names) for _ in range(key[1])))
            body = random_goal(rng, callable_, names, binary, rng.randint(0, cfg.max_depth))
            clauses.setdefault(key, []).append(Clause(head, body))
        callable_.append(key)
    program = Program(clauses, {k for k in edb}, [], db)
    qnames = ["X", "Y", "Z"]
    lo, hi = cfg.query_goals
    query = conj([random_goal(rng, callable_, qnames, binary, rng.randint(0, 1))
                  for _ in range(rng.randint(lo, hi))])
    return RandomCase(program, query, seed)
