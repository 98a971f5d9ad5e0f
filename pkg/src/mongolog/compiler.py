"""Translation of Mongolog goals into pipelines, and query solving.

Variable instantiations accumulate under ``vars``.  Every construct that
needs scratch space draws fresh top-level paths ``tmp1``, ``tmp2``, ... from
the compile context; the branch index of a disjunction lives at the fixed
path ``tmpbranch`` inside each branch result.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional

from .engine import (
    ASC, ONE, And, ArrayDef, Compare, Cond, Const, Eq, Exists, FactExpr, GraphLookup, InstantiateExpr,
    Keep, Limit, Lookup, Match, Named, Not, Or, Pipeline, PathRef, Project, Set, Sort,
    SubsetEq, SubtermExpr, TermExpr, Unwind, UnwindPreserve, FALSE_EXPR, TRUE_EXPR,
    is_scoped_filter, run_pipeline,
)
from .errors import CompileError
from .frontend import Program, collection_name
from .goals import (
    Call, Conj, Disj, EqG, FalseG, Goal, GroundG, IfThen, IfThenElse, Ignore, LimitG, Neg,
    NeqG, NonvarG, Once, Transitive, TrueG, Unify, VarG, conj, goal_to_term, goal_vars,
    predicate_key, rename_goal,
)
from .terms import (
    Atom, Compound, Num, Term, Var, constant_value, flatten, indexed_vars, is_ground,
    rename_term, unflatten, value_term, var_prefix,
)
from .values import EPSILON, Path, Tree, subtree

VARS: Path = ("vars",)
BRANCH: Path = ("tmpbranch",)
ONLY_VALUES = Exists(("v",))
VARS_SPEC = ((VARS, PathRef(VARS)),)


@dataclass
class CompileContext:
    program: Program
    live: frozenset = frozenset()
    fold: Optional[Callable[[Goal], Goal]] = None
    reduce_pv: bool = False
    _temps: itertools.count = field(default_factory=lambda: itertools.count(1))
    _expansions: itertools.count = field(default_factory=lambda: itertools.count(1))

    def fresh(self) -> Path:
        return (f"tmp{next(self._temps)}",)

    def with_live(self, live) -> "CompileContext":
        return CompileContext(self.program, frozenset(live), self.fold, self.reduce_pv,
                              self._temps, self._expansions)


def var_path(name: str) -> Path:
    return VARS + (name,)


def rebind(p: Path) -> Project:
    """ρ_{p_v/p.p_v}"""
    return Project((Set(VARS, PathRef(p + VARS)),))


def rho_term(ts, p: Path) -> Project:
    items = [Keep(VARS)]
    seen = set()
    for t in ts:
        for iv in indexed_vars(t):
            if iv.name not in seen:
                seen.add(iv.name)
                items.append(Set(var_path(iv.name), SubtermExpr(p, var_prefix(iv.key), True)))
    return Project(tuple(items))


def repeated_var_check(ts, p: Path) -> list:
    """Equalities forcing repeated occurrences of a variable to agree."""
    keys: dict[str, list[str]] = {}
    for t in ts:
        for iv in indexed_vars(t):
            keys.setdefault(iv.name, []).append(iv.key)
    conds = [Eq(SubtermExpr(p, var_prefix(ks[0])), SubtermExpr(p, var_prefix(k)))
             for ks in keys.values() for k in ks[1:]]
    if not conds:
        return []
    return [Match(conds[0] if len(conds) == 1 else And(tuple(conds)))]


def position_checks(ts, p: Path) -> list:
    """Each variable's position must survive instantiation.

    Flattened terms carry no arity, so ``f(a) = f(a, X)`` would otherwise
    agree on both sides with X reading nothing.
    """
    keys = {}
    for t in ts:
        for iv in indexed_vars(t):
            keys.setdefault(iv.name, iv.key)
    return [Compare("gt", SubtermExpr(p, var_prefix(k)), Const([])) for k in keys.values()]


def shape_checks(t: Term, p: Path) -> list:
    """What a stored fact must satisfy beyond containing the constants of ``t``.

    Containment alone lets ``p(f(X))`` match ``p(f(a, b))`` and ``p(f(X, Y))``
    match ``p(f(a))``: a nested compound must have no argument past its arity,
    every variable position must exist in the fact, and a variable bound earlier
    must equal the whole subterm at its position, not only a prefix of it.
    """
    conds = []

    def walk(s: Term, key: str) -> None:
        if isinstance(s, Compound):
            if key:  # the collection fixes the arity of the root
                extra = f"{key}.{len(s.args) + 1}"
                conds.append(Not(Compare("gt", SubtermExpr(p, extra), Const([]))))
            for i, a in enumerate(s.args, 1):
                walk(a, f"{key}.{i}" if key else str(i))

    walk(t, "")
    conds += position_checks([t], p)
    seen = set()
    for iv in indexed_vars(t):
        if iv.name not in seen:
            seen.add(iv.name)
            px = var_path(iv.name)
            conds.append(Or((Not(Exists(px)), Eq(SubtermExpr(p, var_prefix(iv.key), True), PathRef(px)))))
    return conds


def conjunction(conds: list):
    return conds[0] if len(conds) == 1 else And(tuple(conds))


def readable(stages: list) -> list:
    """Scoped pipelines whose ``vars`` is read back must keep it materialised."""
    if is_scoped_filter(stages):
        return stages + [Project((Keep(VARS),))]
    return stages


def translate(goal: Goal, ctx: CompileContext) -> Pipeline:
    return Pipeline(ONE, tuple(stages(goal, ctx)))


def stages(goal: Goal, ctx: CompileContext) -> list:
    if isinstance(goal, TrueG):
        return [Match(TRUE_EXPR)]
    if isinstance(goal, FalseG):
        return [Match(FALSE_EXPR)]
    if isinstance(goal, EqG):
        return [Match(Eq(TermExpr(goal.left, VARS), TermExpr(goal.right, VARS)))]
    if isinstance(goal, NeqG):
        return [Match(Not(Eq(TermExpr(goal.left, VARS), TermExpr(goal.right, VARS))))]
    if isinstance(goal, VarG):
        if isinstance(goal.term, Var):
            return [Match(Not(Exists(var_path(goal.term.name))))]
        return [Match(FALSE_EXPR)]
    if isinstance(goal, NonvarG):
        if isinstance(goal.term, Var):
            return [Match(Exists(var_path(goal.term.name)))]
        return [Match(TRUE_EXPR)]
    if isinstance(goal, GroundG):
        if is_ground(goal.term):
            return [Match(TRUE_EXPR)]
        return [Match(Eq(TermExpr(goal.term, VARS, Not(ONLY_VALUES)), Const([])))]
    if isinstance(goal, Conj):
        return _conj(goal, ctx)
    if isinstance(goal, Disj):
        return _disj(goal.goals, ctx)
    if isinstance(goal, Call):
        return _call(goal.term, ctx)
    if isinstance(goal, LimitG):
        return _limit(goal.goal, goal.k, ctx)
    if isinstance(goal, Once):
        return _limit(goal.goal, 1, ctx)
    if isinstance(goal, Ignore):
        p = ctx.fresh()
        inner = readable(stages(goal.goal, ctx) + [Limit(1)])
        return [Lookup(p, VARS_SPEC, ONE, tuple(inner)), UnwindPreserve(p),
                Project((Set(VARS, Cond(Exists(p + VARS), PathRef(p + VARS), PathRef(VARS))),))]
    if isinstance(goal, Neg):
        p = ctx.fresh()
        inner = stages(goal.goal, ctx) + [Limit(1)]
        return [Lookup(p, VARS_SPEC, ONE, tuple(inner)), Match(Eq(PathRef(p), Const([])))]
    if isinstance(goal, IfThen):
        return _if_then(goal.cond, goal.then, None, ctx)
    if isinstance(goal, IfThenElse):
        return _if_then(goal.cond, goal.then, goal.else_, ctx)
    if isinstance(goal, Unify):
        return _unify(goal.left, goal.right, ctx)
    if isinstance(goal, Transitive):
        return _transitive(goal, ctx)
    raise CompileError(f"cannot translate {goal!r}")


def _conj(goal: Conj, ctx: CompileContext) -> list:
    out = []
    if not ctx.reduce_pv:
        for g in goal.goals:
            out += stages(g, ctx)
        return out
    live = set(ctx.live)
    for g in goal.goals:
        live |= set(goal_vars(g))
        out += stages(g, ctx.with_live(live))
        out.append(Project(tuple(Keep(var_path(n)) for n in sorted(live))))
    return out


def _limit(g: Goal, k: int, ctx: CompileContext) -> list:
    p = ctx.fresh()
    inner = readable(stages(g, ctx) + [Limit(k)])
    return [Lookup(p, VARS_SPEC, ONE, tuple(inner)), Unwind(p), rebind(p)]


def _if_then(c: Goal, t: Goal, e: Optional[Goal], ctx: CompileContext) -> list:
    pi, pt = ctx.fresh(), ctx.fresh()
    spec = VARS_SPEC + ((pi, PathRef(pi)),)
    out = [
        Lookup(pi, VARS_SPEC, ONE, tuple(readable(stages(c, ctx) + [Limit(1)]))),
        Lookup(pt, spec, ONE, tuple(
            [Unwind(pi), Project((Keep(EPSILON), Set(VARS, PathRef(pi + VARS))))] + stages(t, ctx))),
    ]
    if e is None:
        return out + [Unwind(pt), rebind(pt)]
    pe = ctx.fresh()
    empty = lambda p: Eq(PathRef(p), Const([]))  # noqa: E731
    out += [
        Lookup(pe, spec, ONE, tuple(readable([Match(empty(pi))] + stages(e, ctx)))),
        # the condition held but the then-branch failed: no solution
        Match(Not(And((empty(pt), empty(pe))))),
        UnwindPreserve(pt),
        UnwindPreserve(pe),
        Project((Set(VARS, Cond(empty(pt), PathRef(pe + VARS), PathRef(pt + VARS))),)),
    ]
    return out


def _unify(t1: Term, t2: Term, ctx: CompileContext) -> list:
    p1, p2 = ctx.fresh(), ctx.fresh()
    return [
        Project((Keep(VARS), Set(p1, TermExpr(t1, VARS)), Set(p2, TermExpr(t2, VARS)))),
        Project((Keep(VARS), Set(p1, InstantiateExpr(p1, p2)), Set(p2, InstantiateExpr(p2, p1)))),
        Match(conjunction([Eq(PathRef(p1), PathRef(p2)), *position_checks([t1, t2], p1)])),
        *repeated_var_check([t1, t2], p1),
        rho_term([t1, t2], p1),
    ]


def _disj(goals, ctx: CompileContext) -> list:
    out, branch_paths = [], []
    for k, g in enumerate(goals, 1):
        pk = ctx.fresh()
        branch_paths.append(pk)
        inner = stages(g, ctx) + [Project((Keep(VARS), Set(BRANCH, Const(k))))]
        out.append(Lookup(pk, VARS_SPEC, ONE, tuple(inner)))
    p = ctx.fresh()
    return out + [
        Project((Keep(VARS), Set(p, ArrayDef(tuple(PathRef(q) for q in branch_paths))))),
        Unwind(p),
        Unwind(p),
        Sort(((ASC, p + BRANCH),)),
        rebind(p),
    ]


def _edb_call(t: Term, coll: str, ctx: CompileContext) -> list:
    p = ctx.fresh()
    inner = [Match(conjunction([SubsetEq(TermExpr(t, VARS, ONLY_VALUES), FactExpr(EPSILON)),
                                *shape_checks(t, EPSILON)]))]
    inner += repeated_var_check([t], EPSILON)
    inner.append(rho_term([t], EPSILON))
    return [Lookup(p, VARS_SPEC, Named(coll), tuple(inner)), Unwind(p), rebind(p)]


def expand_call(t: Term, ctx: CompileContext) -> Goal:
    """Inline a call to a rule-defined predicate as a disjunction of clause bodies.

    A head argument that is a variable (at its first occurrence) is replaced
    by the call argument throughout the clause; every other head argument is
    unified with the call argument before the body runs.
    """
    key = predicate_key(t)
    args = t.args if isinstance(t, Compound) else ()
    branches = []
    for clause in ctx.program.clauses[key]:
        suffix = f"_{next(ctx._expansions)}"
        head = rename_term(clause.head, lambda n: n + suffix)
        body = rename_goal(clause.body, lambda n: n + suffix)
        head_args = head.args if isinstance(head, Compound) else ()
        subst: dict[str, Term] = {}
        unifs = []
        for a, h in zip(args, head_args):
            if isinstance(h, Var) and h.name not in subst:
                subst[h.name] = a
            else:
                unifs.append(Unify(a, _substitute(h, subst)))
        body = _substitute_goal(body, subst)
        parts = unifs + ([] if isinstance(body, TrueG) else [body])
        branches.append(conj(parts))
    goal = branches[0] if len(branches) == 1 else Disj(tuple(branches))
    return ctx.fold(goal) if ctx.fold else goal


def _substitute(t: Term, subst: dict) -> Term:
    if isinstance(t, Var):
        return subst.get(t.name, t)
    if isinstance(t, Compound):
        return Compound(t.functor, tuple(_substitute(a, subst) for a in t.args))
    return t


def _substitute_goal(g: Goal, subst: dict) -> Goal:
    if not subst:
        return g
    from . import goals as G
    s = lambda t: _substitute(t, subst)  # noqa: E731
    if isinstance(g, Call):
        return Call(s(g.term))
    if isinstance(g, (Conj, Disj)):
        return type(g)(tuple(_substitute_goal(x, subst) for x in g.goals))
    if isinstance(g, IfThen):
        return IfThen(_substitute_goal(g.cond, subst), _substitute_goal(g.then, subst))
    if isinstance(g, IfThenElse):
        return IfThenElse(*(_substitute_goal(x, subst) for x in (g.cond, g.then, g.else_)))
    if isinstance(g, (Neg, Once, Ignore)):
        return type(g)(_substitute_goal(g.goal, subst))
    if isinstance(g, LimitG):
        return LimitG(_substitute_goal(g.goal, subst), g.k)
    if isinstance(g, (Unify, EqG, NeqG)):
        return type(g)(s(g.left), s(g.right))
    if isinstance(g, (VarG, NonvarG, GroundG)):
        return type(g)(s(g.term))
    if isinstance(g, G.Transitive):
        return G.Transitive(g.pred, s(g.left), s(g.right))
    return g


def _call(t: Term, ctx: CompileContext) -> list:
    key = predicate_key(t)
    if ctx.program.is_idb(key):
        return stages(expand_call(t, ctx), ctx)
    if ctx.program.is_edb(key):
        return _edb_call(t, collection_name(key), ctx)
    raise CompileError(f"unknown predicate {key[0]}/{key[1]}")


def _transitive(goal: Transitive, ctx: CompileContext) -> list:
    key = (goal.pred, 2)
    if ctx.program.is_idb(key) or not ctx.program.is_edb(key):
        raise CompileError(f"transitive/1 needs a stored binary relation, {goal.pred}/2 is not one")
    coll = Named(collection_name(key))
    x, y = goal.left, goal.right
    if not all(isinstance(t, (Var, Atom, Num)) for t in (x, y)):
        # closure nodes are the constants stored at positions 1 and 2
        return [Match(FALSE_EXPR)]
    out = []
    if isinstance(x, Var):
        px, p1 = var_path(x.name), ctx.fresh()
        out += [
            Lookup(p1, VARS_SPEC, coll, (
                Match(Not(Exists(px))),
                Project((Keep(VARS), Set(px, PathRef(("1",))))),
            )),
            UnwindPreserve(p1),
            Project((Keep(VARS), Set(px, Cond(Exists(p1 + px), PathRef(p1 + px), PathRef(px))))),
        ]
        start = PathRef(px)
    else:
        start = Const(constant_value(x))
    p = ctx.fresh()
    out += [GraphLookup(p, None, TRUE_EXPR, (start,), ("1",), ("2",), coll), Unwind(p)]
    target = PathRef(p + ("2",))
    if isinstance(y, Var):
        py = var_path(y.name)
        out += [
            Match(Or((Not(Exists(py)), Eq(target, PathRef(py))))),
            Project((Keep(VARS), Set(py, target))),
        ]
    else:
        out.append(Match(Eq(target, Const(constant_value(y)))))
    return out


# -- queries ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Solution:
    bindings: dict
    goals: tuple

    def binding_text(self) -> dict:
        from .printer import term_text
        return {k: term_text(v) for k, v in sorted(self.bindings.items())}


@dataclass(frozen=True)
class CompiledQuery:
    goal: Goal
    variables: tuple
    pipeline: Pipeline


def query_conjuncts(goal: Goal) -> tuple:
    return goal.goals if isinstance(goal, Conj) else (goal,)


def final_projection(variables) -> Project:
    return Project(tuple(Keep(var_path(v)) for v in variables))


def compile_query(goal: Goal, program: Program, opt: int = 0) -> CompiledQuery:
    from . import optimizer
    return optimizer.compile_optimized(goal, program, opt)


def solution_of(tree: Tree, goal: Goal, variables) -> Solution:
    bound = subtree(tree, VARS)
    bindings = {}
    if isinstance(bound, dict):
        for name in variables:
            if name in bound:
                bindings[name] = value_term(bound[name])
    inst = tuple(unflatten(flatten(goal_to_term(g), VARS, "", tree.root))
                 for g in query_conjuncts(goal))
    return Solution(bindings, inst)


def solve(goal: Goal, program: Program, opt: int = 0) -> list[Solution]:
    cq = compile_query(goal, program, opt)
    forest = run_pipeline(cq.pipeline, program.db)
    return [solution_of(t, goal, cq.variables) for t in forest]


def user_variables(goal: Goal) -> tuple:
    return tuple(v for v in goal_vars(goal) if not v.startswith("_"))
