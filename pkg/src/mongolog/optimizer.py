"""Goal- and pipeline-level rewrites.

Passes run in a fixed order: predicate elimination on goals (also applied to
every inlined rule body), translation, lookup elimination, lookup merging.
Level 2 additionally interleaves ``vars`` reductions between conjuncts.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

from . import compiler as C
from .engine import (
    ONE, And, ArrayDef, BoolDef, Compare, Cond, Const, Eq, Exists, FactExpr, FilterExpr,
    GraphLookup, InstantiateExpr, Keep, Limit, Lookup, Match, Not, Or, PathRef, Pipeline,
    Project, Set, Sort, SortKeyExpr, SubsetEq, SubtermExpr, TermExpr, Unwind, UnwindPreserve,
    is_scoped_filter,
)
from .goals import (
    FALSE, TRUE, Conj, Disj, EqG, FalseG, Goal, GroundG, IfThen, IfThenElse, Ignore, LimitG,
    Neg, NeqG, NonvarG, Once, TrueG, Unify, VarG, conj,
)
from .terms import Var, is_ground, term_vars, unify_terms


@dataclass(frozen=True)
class OptConfig:
    fold: bool = False
    eliminate_lookups: bool = False
    reduce_pv: bool = False
    merge_lookups: bool = False

    @classmethod
    def level(cls, n: int) -> "OptConfig":
        if n not in (0, 1, 2):
            raise ValueError(f"optimization level must be 0, 1 or 2, got {n}")
        return cls(fold=n >= 1, eliminate_lookups=n >= 1, reduce_pv=n >= 2, merge_lookups=n >= 2)


# -- predicate elimination --------------------------------------------------------------


def _decided(g: Goal) -> bool:
    return isinstance(g, (TrueG, FalseG))


def _compare_fold(left, right) -> Goal | None:
    if left == right:
        return TRUE
    if unify_terms(left, right) is None:
        return FALSE
    return None


def eliminate_predicates(goal: Goal) -> Goal:
    """Partially evaluate ``goal`` into TRUE/FALSE wherever that needs no data."""
    g = goal
    if isinstance(g, (Unify, EqG)):
        return _compare_fold(g.left, g.right) or g
    if isinstance(g, NeqG):
        folded = _compare_fold(g.left, g.right)
        if folded is None:
            return g
        return FALSE if isinstance(folded, TrueG) else TRUE
    if isinstance(g, VarG):
        return g if isinstance(g.term, Var) else FALSE
    if isinstance(g, NonvarG):
        return g if isinstance(g.term, Var) else TRUE
    if isinstance(g, GroundG):
        return TRUE if is_ground(g.term) else g
    if isinstance(g, Neg):
        inner = eliminate_predicates(g.goal)
        if _decided(inner):
            return FALSE if isinstance(inner, TrueG) else TRUE
        return Neg(inner)
    if isinstance(g, IfThen):
        c = eliminate_predicates(g.cond)
        if isinstance(c, TrueG):
            return eliminate_predicates(g.then)
        if isinstance(c, FalseG):
            return FALSE
        return IfThen(c, eliminate_predicates(g.then))
    if isinstance(g, IfThenElse):
        c = eliminate_predicates(g.cond)
        if isinstance(c, TrueG):
            return eliminate_predicates(g.then)
        if isinstance(c, FalseG):
            return eliminate_predicates(g.else_)
        return IfThenElse(c, eliminate_predicates(g.then), eliminate_predicates(g.else_))
    if isinstance(g, Disj):
        branches = [b for b in map(eliminate_predicates, g.goals) if not isinstance(b, FalseG)]
        if not branches:
            return FALSE
        return branches[0] if len(branches) == 1 else Disj(tuple(branches))
    if isinstance(g, Conj):
        parts = []
        for s in map(eliminate_predicates, g.goals):
            if isinstance(s, FalseG):
                return FALSE
            if isinstance(s, Conj):
                parts.extend(s.goals)
            elif not isinstance(s, TrueG):
                parts.append(s)
        return conj(parts)
    if isinstance(g, Ignore):
        inner = eliminate_predicates(g.goal)
        return TRUE if _decided(inner) else Ignore(inner)
    if isinstance(g, (LimitG, Once)):
        inner = eliminate_predicates(g.goal)
        k = g.k if isinstance(g, LimitG) else 1
        # limit(true, 0) has no solution, so the fold needs k > 0
        if _decided(inner) and k > 0:
            return inner
        return LimitG(inner, k) if isinstance(g, LimitG) else Once(inner)
    return g


# -- lookup elimination -----------------------------------------------------------------


def _paths_of(x):
    """Every path a stage parameter reads or writes."""
    if isinstance(x, PathRef):
        yield x.path
    elif isinstance(x, Exists):
        yield x.path
    elif isinstance(x, (TermExpr,)):
        yield x.path
    elif isinstance(x, SubtermExpr):
        yield x.path
    elif isinstance(x, InstantiateExpr):
        yield x.left
        yield x.right
    elif isinstance(x, SortKeyExpr):
        yield x.path
    elif isinstance(x, FilterExpr):
        yield x.path
        for q, d in x.lets:
            yield from _paths_of(d)
    elif isinstance(x, Keep):
        yield x.path
    elif isinstance(x, Set):
        yield x.path
        yield from _paths_of(x.value)
    if isinstance(x, (Eq, SubsetEq, Compare)):
        yield from _paths_of(x.left)
        yield from _paths_of(x.right)
    elif isinstance(x, (And, Or)):
        for i in x.items:
            yield from _paths_of(i)
    elif isinstance(x, Not):
        yield from _paths_of(x.item)
    elif isinstance(x, ArrayDef):
        for i in x.items:
            yield from _paths_of(i)
    elif isinstance(x, BoolDef):
        yield from _paths_of(x.expr)
    elif isinstance(x, Cond):
        yield from _paths_of(x.test)
        yield from _paths_of(x.then)
        yield from _paths_of(x.else_)
    elif isinstance(x, Match):
        yield from _paths_of(x.cond)
    elif isinstance(x, Project):
        for i in x.items:
            yield from _paths_of(i)


def _reads_document(x) -> bool:
    if isinstance(x, FactExpr):
        return True
    if isinstance(x, (And, Or)):
        return any(_reads_document(i) for i in x.items)
    if isinstance(x, Not):
        return _reads_document(x.item)
    if isinstance(x, (Eq, SubsetEq, Compare)):
        return _reads_document(x.left) or _reads_document(x.right)
    if isinstance(x, Match):
        return _reads_document(x.cond)
    if isinstance(x, Project):
        return any(isinstance(i, Set) and _reads_document(i.value) for i in x.items)
    if isinstance(x, Cond):
        return any(_reads_document(y) for y in (x.test, x.then, x.else_))
    if isinstance(x, ArrayDef):
        return any(_reads_document(i) for i in x.items)
    return False


def _touches_document(path) -> bool:
    return not path or path[0] == "_id" or path[0][:1].isdigit()


def _prefix_ok(stage) -> bool:
    """Stages that behave the same on the unit tree and on a joined document."""
    if isinstance(stage, Project):
        if not any(isinstance(i, Keep) and not i.path for i in stage.items):
            return False
    elif not isinstance(stage, Match):
        return False
    if _reads_document(stage):
        return False
    paths = [p for p in _paths_of(stage) if not (isinstance(stage, Project) and p == ())]
    return not any(_touches_document(p) for p in paths)


def _is_rebind(stage, as_) -> bool:
    return stage == Project((Set(C.VARS, PathRef(as_ + C.VARS)),))


def _eliminate_once(stages: list):
    for i, s in enumerate(stages):
        if isinstance(s, Lookup) and i + 2 < len(stages):
            if (s.vars == C.VARS_SPEC and stages[i + 1] == Unwind(s.as_)
                    and _is_rebind(stages[i + 2], s.as_)
                    and all(_prefix_ok(x) for x in stages[:i])):
                return s.source, stages[:i] + list(s.inner) + stages[i + 3:]
        if not isinstance(s, Match) and not isinstance(s, Project):
            return None
    return None


def eliminate_lookup(p: Pipeline) -> Pipeline:
    """Fold ``C_one ▷ S1 ▷ λ[C, S2] ▷ ω ▷ ρ`` into ``C ▷ S1 ▷ S2``, nested levels first."""
    stages = [_eliminate_nested(s) for s in p.stages]
    source = p.source
    while source == ONE:
        step = _eliminate_once(stages)
        if step is None:
            break
        source, stages = step
    return Pipeline(source, tuple(stages))


def _eliminate_nested(s):
    if not isinstance(s, Lookup) or s.source != ONE:
        if isinstance(s, Lookup):
            return replace(s, inner=tuple(_eliminate_nested(x) for x in s.inner))
        return s
    inner = eliminate_lookup(Pipeline(ONE, s.inner))
    if is_scoped_filter(inner.stages) and not is_scoped_filter(s.inner):
        # the rewritten lookup would hand back raw documents
        return replace(s, inner=tuple(_eliminate_nested(x) for x in s.inner))
    return replace(s, source=inner.source, inner=inner.stages)


# -- lookup merging ---------------------------------------------------------------------


def _single_match(s) -> bool:
    return isinstance(s, Lookup) and len(s.inner) == 1 and isinstance(s.inner[0], Match)


def _prefixes(a, b) -> bool:
    n = min(len(a), len(b))
    return a[:n] == b[:n]


def _mergeable(a, b) -> bool:
    if not (_single_match(a) and _single_match(b)):
        return False
    if a.source != b.source or a.vars != b.vars or _prefixes(a.as_, b.as_):
        return False
    reads = [p for _, d in b.vars for p in _paths_of(d)]
    return not any(_prefixes(p, a.as_) for p in reads)


def merge_pair(a: Lookup, b: Lookup) -> list:
    phi1, phi2 = a.inner[0].cond, b.inner[0].cond
    return [
        Lookup(a.as_, a.vars, a.source, (Match(Or((phi1, phi2))),)),
        Project((
            Keep(()),
            Set(b.as_, FilterExpr(a.as_, phi2, a.vars)),
            Set(a.as_, FilterExpr(a.as_, phi1, a.vars)),
        )),
    ]


def _emptiness_test(s, as_) -> bool:
    return s == Match(Eq(PathRef(as_), Const([])))


def _mentions(stage, as_) -> bool:
    if isinstance(stage, Lookup):
        paths = [p for _, d in stage.vars for p in _paths_of(d)] + [stage.as_]
    elif isinstance(stage, GraphLookup):
        paths = [p for d in stage.starts for p in _paths_of(d)] + [stage.as_]
    elif isinstance(stage, (Unwind, UnwindPreserve)):
        paths = [stage.path]
    elif isinstance(stage, Sort):
        paths = [p for _, p in stage.keys]
    elif isinstance(stage, Project):
        # keeping the whole tree carries the array along without reading it
        paths = [p for i in stage.items if i != Keep(()) for p in _paths_of(Project((i,)))]
    else:
        paths = list(_paths_of(stage))
    return any(_prefixes(q, as_) for q in paths)


def _trim_for_emptiness(inner: tuple) -> tuple:
    """Drop trailing stages that cannot turn a non-empty result empty."""
    stages = list(inner)
    while stages and (isinstance(stages[-1], Project)
                      or (isinstance(stages[-1], Limit) and stages[-1].k > 0)):
        stages.pop()
    if len(stages) > 1 and all(isinstance(s, Match) for s in stages):
        conds = []
        for s in stages:
            conds.extend(s.cond.items if isinstance(s.cond, And) else (s.cond,))
        stages = [Match(And(tuple(conds)))]
    return tuple(stages)


def existence_lookups(p: Pipeline) -> Pipeline:
    """Shrink lookups whose array is only tested for emptiness, and move each
    test past an independent following lookup so that lookups become adjacent."""
    stages = [replace(s, inner=existence_lookups(Pipeline(s.source, s.inner)).stages)
              if isinstance(s, Lookup) else s for s in p.stages]
    for i, s in enumerate(stages):
        if (isinstance(s, Lookup) and i + 1 < len(stages) and _emptiness_test(stages[i + 1], s.as_)
                and not any(_mentions(x, s.as_) for x in stages[i + 2:])):
            trimmed = _trim_for_emptiness(s.inner)
            # a filter-only inner pipeline hands back raw documents, which is
            # harmless when only the array's emptiness is read
            if all(isinstance(x, Match) for x in trimmed):
                stages[i] = replace(s, inner=trimmed)
    changed = True
    while changed:
        changed = False
        for i, a in enumerate(stages):
            j = _hoistable(stages, i)
            if j is not None:
                b, test_b = stages[j], stages[j + 1]
                stages[i + 1:j + 2] = [b, stages[i + 1], test_b, *stages[i + 2:j]]
                changed = True
                break
    return Pipeline(p.source, tuple(stages))


def _seam(s) -> bool:
    return isinstance(s, Project) and all(isinstance(i, Keep) for i in s.items)


def _var_reads(x):
    """Paths under ``vars`` that a filter-only inner pipeline reads, or None if unsure."""
    if isinstance(x, Match):
        return _var_reads(x.cond)
    if isinstance(x, (Eq, SubsetEq, Compare)):
        left, right = _var_reads(x.left), _var_reads(x.right)
        return None if left is None or right is None else left + right
    if isinstance(x, (And, Or)):
        parts = [_var_reads(i) for i in x.items]
        return None if any(p is None for p in parts) else [q for p in parts for q in p]
    if isinstance(x, Not):
        return _var_reads(x.item)
    if isinstance(x, TermExpr):
        if x.path != C.VARS:
            return None
        return [C.var_path(n) for n in term_vars(x.term)]
    if isinstance(x, (FactExpr, Const)):
        return []
    if isinstance(x, SubtermExpr):
        # a subterm of the joined fact itself reads no variable
        return [] if x.path == () else [x.path]
    if isinstance(x, (PathRef, Exists)):
        return [x.path]
    return None


def _hoistable(stages: list, i: int):
    """Index of a lookup that can move up next to the emptiness-tested lookup at ``i``."""
    a = stages[i]
    if not (isinstance(a, Lookup) and i + 1 < len(stages) and _emptiness_test(stages[i + 1], a.as_)):
        return None
    j = i + 2
    while j < len(stages) and _seam(stages[j]):
        j += 1
    if j + 1 >= len(stages):
        return None
    b = stages[j]
    if not (isinstance(b, Lookup) and _emptiness_test(stages[j + 1], b.as_) and _mergeable(a, b)):
        return None
    if b.vars != C.VARS_SPEC or _mentions(b, a.as_):
        return None
    reads = _var_reads(b.inner[0])
    if reads is None:
        return None
    for seam in stages[i + 2:j]:
        kept = [k.path for k in seam.items]
        if not all(any(r[:len(k)] == k for k in kept) for r in reads if r[:1] == C.VARS):
            return None
        if any(r[:1] != C.VARS for r in reads):
            return None
    return j


def merge_lookups(p: Pipeline) -> Pipeline:
    """Combine adjacent single-match lookups over one collection into one lookup."""
    out: list = []
    stages = [replace(s, inner=merge_lookups(Pipeline(s.source, s.inner)).stages)
              if isinstance(s, Lookup) else s for s in p.stages]
    i = 0
    while i < len(stages):
        if i + 1 < len(stages) and _mergeable(stages[i], stages[i + 1]):
            out += merge_pair(stages[i], stages[i + 1])
            i += 2
        else:
            out.append(stages[i])
            i += 1
    return Pipeline(p.source, tuple(out))


# -- drivers ----------------------------------------------------------------------------


def reduce_pv(goal: Goal, live, program) -> Pipeline:
    """Translate ``goal`` keeping under ``vars`` only what later goals or the caller need."""
    ctx = C.CompileContext(program, frozenset(live), reduce_pv=True)
    return C.translate(_seamed(goal), ctx)


def _seamed(goal: Goal) -> Goal:
    # a lone goal still gets the closing projection of a conjunction seam
    return goal if isinstance(goal, Conj) else Conj((goal,))


def compile_optimized(goal: Goal, program, opt: int = 0) -> "C.CompiledQuery":
    cfg = OptConfig.level(opt)
    variables = C.user_variables(goal)
    g = eliminate_predicates(goal) if cfg.fold else goal
    ctx = C.CompileContext(program, frozenset(variables),
                           fold=eliminate_predicates if cfg.fold else None,
                           reduce_pv=cfg.reduce_pv)
    if cfg.reduce_pv:
        g = _seamed(g)
    pipeline = Pipeline(ONE, tuple(C.stages(g, ctx)) + (C.final_projection(variables),))
    if cfg.eliminate_lookups:
        pipeline = eliminate_lookup(pipeline)
    if cfg.merge_lookups:
        pipeline = merge_lookups(existence_lookups(pipeline))
    return C.CompiledQuery(goal, variables, pipeline)
