"""Reference evaluator for the extended MQuery fragment.

Stage parameters are value definitions and boolean expressions over a tree.
Forests are Python lists of :class:`~mongolog.values.Tree`, evaluated in
order so that every run is reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, Optional, Union

from . import terms
from .errors import EvalError, ResolutionError
from .values import (
    ASC, DESC, EPSILON, UNDEFINED, Path, Tree, attach, compare_default, deep_equal,
    merge, set_path, sort_label_key, subtree,
)

# -- value definitions -------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: Any


@dataclass(frozen=True)
class PathRef:
    path: Path


@dataclass(frozen=True)
class ArrayDef:
    items: tuple


@dataclass(frozen=True)
class BoolDef:
    expr: "BoolExpr"


@dataclass(frozen=True)
class Cond:
    test: "BoolExpr"
    then: "ValueDef"
    else_: "ValueDef"


@dataclass(frozen=True)
class TermExpr:
    term: Any
    path: Path
    filter: Optional["BoolExpr"] = None


@dataclass(frozen=True)
class FactExpr:
    path: Path


@dataclass(frozen=True)
class SubtermExpr:
    path: Path
    key: str
    # binding form: bare constants become scalars, bare variables undefined
    unwrap: bool = False


@dataclass(frozen=True)
class InstantiateExpr:
    left: Path
    right: Path


@dataclass(frozen=True)
class SortKeyExpr:
    direction: str
    path: Path


@dataclass(frozen=True)
class FilterExpr:
    """Elements of the array at ``path`` satisfying ``cond``.

    Each element is tested as a tree merged with ``lets`` evaluated against
    the enclosing tree; lookup merging uses this to split a joined array.
    """

    path: Path
    cond: "BoolExpr"
    lets: tuple = ()


ValueDef = Union[Const, PathRef, ArrayDef, BoolDef, Cond, TermExpr, FactExpr,
                 SubtermExpr, InstantiateExpr, SortKeyExpr, FilterExpr]

# -- boolean expressions -----------------------------------------------------


@dataclass(frozen=True)
class Eq:
    left: ValueDef
    right: ValueDef


@dataclass(frozen=True)
class SubsetEq:
    left: ValueDef
    right: ValueDef


@dataclass(frozen=True)
class Exists:
    path: Path


@dataclass(frozen=True)
class Compare:
    op: str  # "gt", "gte", "lt", "lte"
    left: ValueDef
    right: ValueDef


@dataclass(frozen=True)
class And:
    items: tuple


@dataclass(frozen=True)
class Or:
    items: tuple


@dataclass(frozen=True)
class Not:
    item: "BoolExpr"


BoolExpr = Union[Eq, SubsetEq, Exists, Compare, And, Or, Not]

TRUE_EXPR = Eq(Const(1), Const(1))
FALSE_EXPR = Eq(Const(1), Const(0))

COMPARE_OPS = ("gt", "gte", "lt", "lte")

# -- stages --------------------------------------------------------------------


@dataclass(frozen=True)
class Named:
    name: str


@dataclass(frozen=True)
class One:
    pass


ONE = One()
CollRef = Union[Named, One]


@dataclass(frozen=True)
class Match:
    cond: BoolExpr


@dataclass(frozen=True)
class Unwind:
    path: Path


@dataclass(frozen=True)
class UnwindPreserve:
    path: Path


@dataclass(frozen=True)
class Keep:
    path: Path


@dataclass(frozen=True)
class Set:
    path: Path
    value: ValueDef


@dataclass(frozen=True)
class Project:
    items: tuple


@dataclass(frozen=True)
class Sort:
    keys: tuple  # of (direction, path)


@dataclass(frozen=True)
class Limit:
    k: int

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("limit must be non-negative")


@dataclass(frozen=True)
class Lookup:
    as_: Path
    vars: tuple  # of (path, ValueDef)
    source: CollRef
    inner: tuple = ()

    def __post_init__(self):
        if not self.as_:
            raise ValueError("lookup needs a non-empty output path")
        targets = [q for q, _ in self.vars]
        if len(set(targets)) != len(targets):
            raise ValueError("lookup variable paths must be distinct")


@dataclass(frozen=True)
class GraphLookup:
    as_: Path
    depth_field: Optional[Path]
    criterion: BoolExpr
    starts: tuple
    connect_to: Path
    connect_from: Path
    source: CollRef
    max_depth: Optional[int] = None

    def __post_init__(self):
        if not self.as_:
            raise ValueError("graph lookup needs a non-empty output path")


Stage = Union[Match, Unwind, UnwindPreserve, Project, Sort, Limit, Lookup, GraphLookup]


@dataclass(frozen=True)
class Pipeline:
    source: CollRef
    stages: tuple = field(default=())

    def then(self, *stages: Stage) -> "Pipeline":
        return Pipeline(self.source, self.stages + tuple(stages))


# -- evaluation ------------------------------------------------------------------


def _root(g: Any) -> Any:
    return g.root if isinstance(g, Tree) else g


def eval_value_def(d: ValueDef, g: Any) -> Any:
    g = _root(g)
    if isinstance(d, Const):
        return d.value
    if isinstance(d, PathRef):
        return subtree(g, d.path)
    if isinstance(d, ArrayDef):
        return [v for v in (eval_value_def(i, g) for i in d.items) if v is not UNDEFINED]
    if isinstance(d, BoolDef):
        return eval_bool(d.expr, g)
    if isinstance(d, Cond):
        return eval_value_def(d.then if eval_bool(d.test, g) else d.else_, g)
    if isinstance(d, TermExpr):
        keep = None if d.filter is None else (lambda e: eval_bool(d.filter, e))
        return terms.eval_term_expr(d.term, d.path, keep, g)
    if isinstance(d, FactExpr):
        return terms.eval_fact(d.path, g)
    if isinstance(d, SubtermExpr):
        return terms.eval_subterm(d.path, d.key, g, d.unwrap)
    if isinstance(d, InstantiateExpr):
        return terms.eval_instantiate(d.left, d.right, g)
    if isinstance(d, SortKeyExpr):
        return {d.direction: subtree(g, d.path)}
    if isinstance(d, FilterExpr):
        arr = subtree(g, d.path)
        if not isinstance(arr, list):
            return UNDEFINED
        extra = _injected(d.lets, g)
        return [e for e in arr
                if eval_bool(d.cond, merge(e, extra) if isinstance(e, dict) else e)]
    raise TypeError(f"not a value definition: {d!r}")


def _as_set(v: Any) -> list:
    return v if isinstance(v, list) else [v]


def _contains(values: list, v: Any) -> bool:
    return any(deep_equal(v, w) for w in values)


def eval_bool(b: BoolExpr, g: Any) -> bool:
    g = _root(g)
    if isinstance(b, Eq):
        l, r = eval_value_def(b.left, g), eval_value_def(b.right, g)
        return l is not UNDEFINED and r is not UNDEFINED and deep_equal(l, r)
    if isinstance(b, SubsetEq):
        l, r = eval_value_def(b.left, g), eval_value_def(b.right, g)
        if l is UNDEFINED or r is UNDEFINED:
            return False
        rs = _as_set(r)
        return all(_contains(rs, v) for v in _as_set(l))
    if isinstance(b, Exists):
        return subtree(g, b.path) is not UNDEFINED
    if isinstance(b, Compare):
        l, r = eval_value_def(b.left, g), eval_value_def(b.right, g)
        if l is UNDEFINED or r is UNDEFINED:
            return False
        c = compare_default(l, r)
        return {"gt": c > 0, "gte": c >= 0, "lt": c < 0, "lte": c <= 0}[b.op]
    if isinstance(b, And):
        return all(eval_bool(i, g) for i in b.items)
    if isinstance(b, Or):
        return any(eval_bool(i, g) for i in b.items)
    if isinstance(b, Not):
        return not eval_bool(b.item, g)
    raise TypeError(f"not a boolean expression: {b!r}")


def resolve(source: CollRef, db: Any) -> list[Tree]:
    if isinstance(source, One):
        return [Tree({"_id": 1})]
    try:
        docs = db.collection(source.name) if hasattr(db, "collection") else db[source.name]
    except KeyError:
        raise ResolutionError(f"unknown collection {source.name!r}") from None
    return [Tree(d) for d in docs]


def _injected(lets: Iterable, g: dict) -> dict:
    out: dict = {}
    for q, d in lets:
        v = eval_value_def(d, g)
        if v is not UNDEFINED:
            out = merge(out, attach(q, v))
    return out


def _project(items: tuple, g: dict) -> dict:
    out: dict = {}
    if "_id" in g:
        out["_id"] = g["_id"]
    for it in items:
        if isinstance(it, Keep):
            if not it.path:
                out = merge(out, g)
                continue
            v = subtree(g, it.path)
            if v is not UNDEFINED:
                out = set_path(out, it.path, v)
    for it in items:
        if isinstance(it, Set):
            v = eval_value_def(it.value, g)
            if v is not UNDEFINED:
                out = set_path(out, it.path, v)
    return out


def _unwind(t: Tree, path: Path, preserve: bool) -> list[Tree]:
    v = subtree(t.root, path)
    if isinstance(v, list) and v:
        return [t.with_root(set_path(t.root, path, el)) for el in v]
    if v is None or v is UNDEFINED or v == []:
        return [t] if preserve else []
    return [t]


def _limit(forest: list[Tree], k: int) -> list[Tree]:
    if all(not t.sort_label for t in forest):
        return forest[:k]
    return sorted(forest, key=lambda t: sort_label_key(t.sort_label))[:k]


def is_scoped_filter(stages: Iterable[Stage]) -> bool:
    """True when a lookup's inner pipeline only filters its source trees.

    Such lookups return the joined documents unchanged, without the fields
    injected by the variable specification (the behavior the aggregation
    framework shows for let variables).
    """
    return all(isinstance(s, (Match, Limit)) for s in stages)


def _lookup(stage: Lookup, forest: list[Tree], db: Any) -> list[Tree]:
    source = resolve(stage.source, db)
    filtering = is_scoped_filter(stage.inner)
    out = []
    for t in forest:
        extra = _injected(stage.vars, t.root)
        joined = [Tree(merge(s.root, extra)) for s in source]
        result = run_stages(stage.inner, joined, db)
        if filtering:
            original = {id(j): s.root for j, s in zip(joined, source)}
            arr = [original[id(r)] for r in result]
        else:
            arr = [r.root for r in result]
        out.append(t.with_root(set_path(t.root, stage.as_, arr)))
    return out


def _frontier_values(v: Any) -> list:
    if v is UNDEFINED or v is None:
        return []
    return list(v) if isinstance(v, list) else [v]


def _connects(doc: dict, path: Path, frontier: list) -> bool:
    v = subtree(doc, path)
    return any(_contains(frontier, x) for x in _frontier_values(v))


def _graph_search(stage: GraphLookup, source: list[Tree], start: Any) -> list[dict]:
    visited: dict = {}
    frontier = _frontier_values(start)
    depth = 1
    while frontier and (stage.max_depth is None or depth - 1 <= stage.max_depth):
        nxt: list = []
        for s in source:
            key = s.root.get("_id", id(s.root))
            if key in visited:
                continue
            if _connects(s.root, stage.connect_to, frontier) and eval_bool(stage.criterion, s.root):
                doc = s.root
                if stage.depth_field:
                    doc = set_path(doc, stage.depth_field, depth)
                visited[key] = doc
                nxt.extend(_frontier_values(subtree(s.root, stage.connect_from)))
        frontier = nxt
        depth += 1
    return list(visited.values())


def _graph_lookup(stage: GraphLookup, forest: list[Tree], db: Any) -> list[Tree]:
    source = resolve(stage.source, db)
    out = []
    for t in forest:
        for d in stage.starts:
            arr = _graph_search(stage, source, eval_value_def(d, t.root))
            out.append(t.with_root(set_path(t.root, stage.as_, arr)))
    return out


def run_stage(stage: Stage, forest: list[Tree], db: Any = None) -> list[Tree]:
    if isinstance(stage, Match):
        return [t for t in forest if eval_bool(stage.cond, t.root)]
    if isinstance(stage, Unwind):
        return [u for t in forest for u in _unwind(t, stage.path, False)]
    if isinstance(stage, UnwindPreserve):
        return [u for t in forest for u in _unwind(t, stage.path, True)]
    if isinstance(stage, Project):
        return [t.with_root(_project(stage.items, t.root)) for t in forest]
    if isinstance(stage, Sort):
        labelled = [
            Tree(t.root, tuple((d, subtree(t.root, p)) for d, p in stage.keys) + t.sort_label)
            for t in forest
        ]
        return sorted(labelled, key=lambda t: sort_label_key(t.sort_label))
    if isinstance(stage, Limit):
        return _limit(forest, stage.k)
    if isinstance(stage, Lookup):
        return _lookup(stage, forest, db)
    if isinstance(stage, GraphLookup):
        return _graph_lookup(stage, forest, db)
    raise EvalError(f"unknown stage {stage!r}")


def run_stages(stages: Iterable[Stage], forest: list[Tree], db: Any = None) -> list[Tree]:
    for s in stages:
        forest = run_stage(s, forest, db)
    return forest


def run_pipeline(pipeline: Pipeline, db: Any = None) -> list[Tree]:
    return run_stages(pipeline.stages, resolve(pipeline.source, db), db)


__all__ = [
    "ASC", "DESC", "EPSILON", "Const", "PathRef", "ArrayDef", "BoolDef", "Cond", "TermExpr",
    "FactExpr", "SubtermExpr", "InstantiateExpr", "SortKeyExpr", "FilterExpr", "Eq",
    "SubsetEq", "Exists", "Compare", "And", "Or", "Not", "TRUE_EXPR", "FALSE_EXPR",
    "Named", "One", "ONE", "Match", "Unwind", "UnwindPreserve", "Keep", "Set", "Project",
    "Sort", "Limit", "Lookup", "GraphLookup", "Pipeline", "eval_value_def", "eval_bool",
    "run_stage", "run_stages", "run_pipeline", "resolve", "is_scoped_filter",
]
