"""Aggregation scripts for the mongo shell, and a reader for them.

``emit`` renders a pipeline as ``db.<collection>.aggregate([...])``.
``parse_emitted`` reads such a script back into a pipeline; for every
pipeline the compiler produces the two are mutually inverse.

Term expressions have no native aggregation operator.  They are emitted as
``{$let: {vars: {mlg: {$literal: <description>}}, in: <lowering>}}``: the
literal description is what ``parse_emitted`` reads, and the lowering is a
best-effort expression that has not been checked against a live server.
Scripts containing one start with an ``// approximate`` line.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Any

from .engine import (
    ONE, And, ArrayDef, BoolDef, Compare, Cond, Const, Eq, Exists, FactExpr, FilterExpr,
    GraphLookup, InstantiateExpr, Keep, Limit, Lookup, Match, Named, Not, One, Or, PathRef,
    Pipeline, Project, Set, Sort, SortKeyExpr, SubsetEq, SubtermExpr, TermExpr, Unwind,
    UnwindPreserve, TRUE_EXPR, is_scoped_filter,
)
from .errors import MongologError
from .terms import flatten, unflatten
from .values import ASC, DESC, parse_path, render_path

ONE_NAME = "_one"
APPROXIMATE = "// approximate: term expressions are lowered without server validation"
_IDENT = re.compile(r"^[A-Za-z][A-Za-z0-9_]*$")


class EmitError(MongologError):
    pass


class Bare(str):
    """An object key printed without quotes (operators, options, let names)."""


# -- rendering --------------------------------------------------------------------------


def _scalar(v: Any) -> str:
    if v is None:
        return "null"
    if v is True:
        return "true"
    if v is False:
        return "false"
    if isinstance(v, (int, float)):
        return json.dumps(v)
    return json.dumps(v, ensure_ascii=False)


def _key(k: str) -> str:
    return str(k) if isinstance(k, Bare) else json.dumps(k, ensure_ascii=False)


def _inline(x: Any) -> str:
    if isinstance(x, dict):
        if not x:
            return "{}"
        return "{ " + ", ".join(f"{_key(k)}: {_inline(v)}" for k, v in x.items()) + " }"
    if isinstance(x, list):
        return "[" + ", ".join(_inline(v) for v in x) + "]"
    return _scalar(x)


def render(x: Any, indent: int = 0, width: int = 78) -> str:
    flat = _inline(x)
    if len(flat) + indent <= width or not isinstance(x, (dict, list)) or not x:
        return flat
    pad, inner = " " * indent, " " * (indent + 2)
    if isinstance(x, dict):
        body = ",\n".join(f"{inner}{_key(k)}: {render(v, indent + 2, width).lstrip()}"
                          for k, v in x.items())
        return "{\n" + body + "\n" + pad + "}"
    body = ",\n".join(inner + render(v, indent + 2, width) for v in x)
    return "[\n" + body + "\n" + pad + "]"


def collection_text(source) -> str:
    name = ONE_NAME if isinstance(source, One) else source.name
    if _IDENT.match(name):
        return f"db.{name}"
    return f"db.getCollection({json.dumps(name)})"


# -- pipeline -> JS structure ------------------------------------------------------------


@dataclass
class _Scope:
    lets: frozenset = frozenset()   # let names referenced with "$$"
    element: str | None = None      # inside $filter/$map: name bound to the element
    approximate: bool = False


def _path_ref(path, scope: _Scope) -> str:
    if not path:
        return "$$ROOT"
    text = render_path(path)
    if scope.element is not None:
        return f"$${scope.element}.{text}"
    if path[0] in scope.lets:
        return "$$" + text
    return "$" + text


def _literal(v: Any) -> Any:
    return {Bare("$literal"): v}


def _const(v: Any, in_project: bool) -> Any:
    if isinstance(v, bool) or v is None:
        return _literal(v) if in_project else v
    if isinstance(v, (int, float)):
        return _literal(v) if in_project else v
    return _literal(v)


def value_js(d, scope: _Scope, in_project: bool = False) -> Any:
    if isinstance(d, Const):
        return _const(d.value, in_project)
    if isinstance(d, PathRef):
        return _path_ref(d.path, scope)
    if isinstance(d, ArrayDef):
        return [value_js(i, scope) for i in d.items]
    if isinstance(d, BoolDef):
        return bool_js(d.expr, scope)
    if isinstance(d, Cond):
        return {Bare("$cond"): [bool_js(d.test, scope), value_js(d.then, scope),
                                value_js(d.else_, scope)]}
    if isinstance(d, (TermExpr, FactExpr, SubtermExpr, InstantiateExpr, SortKeyExpr, FilterExpr)):
        scope.approximate = True
        return {Bare("$let"): {Bare("vars"): {Bare("mlg"): _literal(_describe(d, scope))},
                               Bare("in"): _lower(d, scope)}}
    raise EmitError(f"cannot emit value definition {d!r}")


def bool_js(b, scope: _Scope) -> Any:
    if isinstance(b, Eq):
        return {Bare("$eq"): [value_js(b.left, scope), value_js(b.right, scope)]}
    if isinstance(b, SubsetEq):
        return {Bare("$setIsSubset"): [value_js(b.left, scope), value_js(b.right, scope)]}
    if isinstance(b, Compare):
        return {Bare("$" + b.op): [value_js(b.left, scope), value_js(b.right, scope)]}
    if isinstance(b, Exists):
        return {Bare("$ne"): [{Bare("$type"): _path_ref(b.path, scope)}, "missing"]}
    if isinstance(b, And):
        return {Bare("$and"): [bool_js(i, scope) for i in b.items]}
    if isinstance(b, Or):
        return {Bare("$or"): [bool_js(i, scope) for i in b.items]}
    if isinstance(b, Not):
        return {Bare("$not"): [bool_js(b.item, scope)]}
    raise EmitError(f"cannot emit condition {b!r}")


def _describe(d, scope: _Scope) -> dict:
    """Exact, literal description of a term expression."""
    plain = _Scope()
    if isinstance(d, TermExpr):
        return {"op": "term", "term": flatten(d.term), "path": render_path(d.path),
                "filter": None if d.filter is None else bool_js(d.filter, plain)}
    if isinstance(d, FactExpr):
        return {"op": "fact", "path": render_path(d.path)}
    if isinstance(d, SubtermExpr):
        return {"op": "subterm", "path": render_path(d.path), "key": d.key, "unwrap": d.unwrap}
    if isinstance(d, InstantiateExpr):
        return {"op": "instantiate", "left": render_path(d.left), "right": render_path(d.right)}
    if isinstance(d, SortKeyExpr):
        return {"op": "sortkey", "direction": d.direction, "path": render_path(d.path)}
    return {"op": "filter", "path": render_path(d.path), "cond": bool_js(d.cond, plain),
            "lets": [[render_path(q), value_js(v, plain)] for q, v in d.lets]}


def _filter(input_: Any, cond: Any) -> dict:
    return {Bare("$filter"): {Bare("input"): input_, Bare("as"): "e", Bare("cond"): cond}}


def _missing(ref: str) -> dict:
    return {Bare("$eq"): [{Bare("$type"): ref}, "missing"]}


def _lower(d, scope: _Scope) -> Any:
    if isinstance(d, TermExpr):
        parts = []
        for e in flatten(d.term):
            if "v" in e:
                parts.append(_literal([e]))
                continue
            ref = _path_ref(d.path + (e["n"],), scope)
            parts.append({Bare("$cond"): [_missing(ref), _literal([e]),
                                          [{"k": e["k"], "v": ref}]]})
        arr = {Bare("$concatArrays"): parts}
        if d.filter is None:
            return arr
        return _filter(arr, bool_js(d.filter, _Scope(element="e")))
    if isinstance(d, FactExpr):
        pairs = {Bare("$objectToArray"): _path_ref(d.path, scope)}
        return _filter(pairs, {Bare("$ne"): ["$$e.k", "_id"]})
    if isinstance(d, SubtermExpr):
        prefix = len(d.key)
        return _filter(_path_ref(d.path, scope), {Bare("$eq"): [
            {Bare("$substrBytes"): ["$$e.k", 0, prefix]}, d.key]})
    if isinstance(d, InstantiateExpr):
        return {Bare("$concatArrays"): [
            _filter(_path_ref(d.left, scope), _missing("$$e.n")),
            _filter(_path_ref(d.right, scope), {Bare("$ne"): [{Bare("$type"): "$$e.v"}, "missing"]}),
        ]}
    if isinstance(d, SortKeyExpr):
        return {Bare("$arrayToObject"): [[{"k": d.direction, "v": _path_ref(d.path, scope)}]]}
    return _filter(_path_ref(d.path, scope), bool_js(d.cond, _Scope(element="e")))


def _project_js(items, scope: _Scope) -> list:
    keeps = [i.path for i in items if isinstance(i, Keep)]
    sets = [i for i in items if isinstance(i, Set)]
    set_fields = {render_path(s.path): value_js(s.value, scope, in_project=True) for s in sets}
    if () in keeps:
        return [{Bare("$addFields"): {render_path(s.path): value_js(s.value, scope) for s in sets}}]
    if not items:
        return [{Bare("$project"): {"_id": 1}}]

    def clash(a, b):
        n = min(len(a), len(b))
        return a[:n] == b[:n]

    if any(clash(k, s.path) for k in keeps for s in sets):
        covered = [s for s in sets if any(k == s.path[:len(k)] for k in keeps)]
        fields = {"_id": 1, **{render_path(k): 1 for k in keeps}}
        fields.update({render_path(s.path): 1 for s in sets if s not in covered})
        return [{Bare("$addFields"): {render_path(s.path): value_js(s.value, scope) for s in sets}},
                {Bare("$project"): fields}]
    fields: dict = {}
    for i in items:
        if isinstance(i, Keep):
            fields[render_path(i.path)] = 1
        else:
            fields[render_path(i.path)] = set_fields[render_path(i.path)]
    return [{Bare("$project"): fields}]


def _source_name(source) -> str:
    return ONE_NAME if isinstance(source, One) else source.name


def stage_js(s, scope: _Scope) -> list:
    if isinstance(s, Match):
        return [{Bare("$match"): {Bare("$expr"): bool_js(s.cond, scope)}}]
    if isinstance(s, Unwind):
        return [{Bare("$unwind"): _path_ref(s.path, _Scope())}]
    if isinstance(s, UnwindPreserve):
        return [{Bare("$unwind"): {Bare("path"): _path_ref(s.path, _Scope()),
                                   Bare("preserveNullAndEmptyArrays"): True}}]
    if isinstance(s, Project):
        return _project_js(s.items, scope)
    if isinstance(s, Sort):
        return [{Bare("$sort"): {render_path(p): (1 if d == ASC else -1) for d, p in s.keys}}]
    if isinstance(s, Limit):
        return [{Bare("$limit"): s.k}]
    if isinstance(s, Lookup):
        names = [render_path(q) for q, _ in s.vars]
        lets = {Bare(n): value_js(d, scope) for n, (_, d) in zip(names, s.vars)}
        if is_scoped_filter(s.inner):
            inner_scope = _Scope(lets=frozenset(q[0] for q, _ in s.vars))
            inner = []
        else:
            inner_scope = _Scope()
            inner = [{Bare("$addFields"): {n: "$$" + n for n in names}}] if names else []
        for x in s.inner:
            inner += stage_js(x, inner_scope)
        scope.approximate |= inner_scope.approximate
        return [{Bare("$lookup"): {
            Bare("from"): _source_name(s.source),
            Bare("let"): lets,
            Bare("pipeline"): inner,
            Bare("as"): render_path(s.as_),
        }}]
    if isinstance(s, GraphLookup):
        starts = [value_js(d, scope) for d in s.starts]
        body = {
            Bare("from"): _source_name(s.source),
            Bare("startWith"): starts[0] if len(starts) == 1 else starts,
            Bare("connectToField"): render_path(s.connect_to),
            Bare("connectFromField"): render_path(s.connect_from),
            Bare("as"): render_path(s.as_),
        }
        if s.max_depth is not None:
            body[Bare("maxDepth")] = s.max_depth
        if s.depth_field:
            body[Bare("depthField")] = render_path(s.depth_field)
        if s.criterion != TRUE_EXPR:
            body[Bare("restrictSearchWithMatch")] = {Bare("$expr"): bool_js(s.criterion, scope)}
        return [{Bare("$graphLookup"): body}]
    raise EmitError(f"cannot emit stage {s!r}")


def pipeline_js(p: Pipeline) -> tuple[list, bool]:
    scope = _Scope()
    out = []
    for s in p.stages:
        out += stage_js(s, scope)
    return out, scope.approximate


def emit(p: Pipeline) -> str:
    stages, approximate = pipeline_js(p)
    head = collection_text(p.source) + ".aggregate("
    if not stages:
        body = head + "[])"
    else:
        body = head + "[\n" + ",\n".join("  " + render(s, 2) for s in stages) + "\n])"
    return (APPROXIMATE + "\n" if approximate else "") + body + "\n"


# -- reading scripts back ------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>\s+|//[^\n]*)
  | (?P<punct>[{}\[\]:,().;])
  | (?P<string>"(?:[^"\\]|\\.)*"|'(?:[^'\\]|\\.)*')
  | (?P<number>-?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[$A-Za-z_][$A-Za-z0-9_]*)
""", re.VERBOSE)


def tokenize_js(text: str) -> list[tuple[str, str, int]]:
    out, pos = [], 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise EmitError(f"unexpected character {text[pos]!r} at offset {pos}")
        kind = m.lastgroup
        if kind != "ws":
            out.append((kind, m.group(), pos))
        pos = m.end()
    return out


class _Reader:
    def __init__(self, text: str):
        self.toks = tokenize_js(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else ("eof", "", -1)

    def take(self, value: str | None = None, kind: str | None = None):
        tok = self.peek()
        if (value is not None and tok[1] != value) or (kind is not None and tok[0] != kind):
            want = value or kind
            raise EmitError(f"expected {want!r}, found {tok[1] or 'end of input'!r}")
        self.i += 1
        return tok

    def value(self) -> Any:
        kind, text, _ = self.peek()
        if text == "{":
            self.take("{")
            obj: dict = {}
            while self.peek()[1] != "}":
                k_kind, k_text, _ = self.take()
                if k_kind == "string":
                    key = _unquote(k_text)
                elif k_kind in ("ident", "number"):
                    key = k_text
                else:
                    raise EmitError(f"bad object key {k_text!r}")
                self.take(":")
                obj[key] = self.value()
                if self.peek()[1] == ",":
                    self.take(",")
                elif self.peek()[1] != "}":
                    raise EmitError(f"expected ',' or '}}', found {self.peek()[1]!r}")
            self.take("}")
            return obj
        if text == "[":
            self.take("[")
            arr = []
            while self.peek()[1] != "]":
                arr.append(self.value())
                if self.peek()[1] == ",":
                    self.take(",")
                elif self.peek()[1] != "]":
                    raise EmitError(f"expected ',' or ']', found {self.peek()[1]!r}")
            self.take("]")
            return arr
        self.i += 1
        if kind == "string":
            return _unquote(text)
        if kind == "number":
            return float(text) if any(c in text for c in ".eE") else int(text)
        if text in ("true", "false", "null"):
            return {"true": True, "false": False, "null": None}[text]
        raise EmitError(f"unexpected {text!r}")


def _unquote(text: str) -> str:
    if text.startswith("'"):
        text = '"' + text[1:-1].replace('\\\'', "'").replace('"', '\\"') + '"'
    return json.loads(text)


def read_script(text: str) -> tuple[str, list]:
    """Collection name and raw stage list of ``db.<c>.aggregate([...])``."""
    r = _Reader(text)
    r.take("db")
    r.take(".")
    name_tok = r.take(kind="ident")
    if name_tok[1] == "getCollection":
        r.take("(")
        name = _unquote(r.take(kind="string")[1])
        r.take(")")
    else:
        name = name_tok[1]
    r.take(".")
    r.take("aggregate")
    r.take("(")
    stages = r.value()
    r.take(")")
    if r.peek()[1] == ";":
        r.take(";")
    if r.peek()[0] != "eof":
        raise EmitError(f"trailing input {r.peek()[1]!r}")
    if not isinstance(stages, list):
        raise EmitError("aggregate() expects an array of stages")
    return name, stages


def _source(name: str):
    return ONE if name == ONE_NAME else Named(name)


def _op(x: Any) -> tuple[str, Any]:
    if not isinstance(x, dict) or len(x) != 1:
        raise EmitError(f"expected a single-operator object, got {x!r}")
    (k, v), = x.items()
    return k, v


def _ref_path(text: str, lets: frozenset) -> tuple:
    if text == "$$ROOT":
        return ()
    if text.startswith("$$"):
        return parse_path(text[2:])
    return parse_path(text[1:])


def _is_ref(x: Any) -> bool:
    return isinstance(x, str) and x.startswith("$")


def read_value(x: Any, lets: frozenset = frozenset()):
    if _is_ref(x):
        return PathRef(_ref_path(x, lets))
    if isinstance(x, list):
        return ArrayDef(tuple(read_value(i, lets) for i in x))
    if not isinstance(x, dict):
        if isinstance(x, str):
            raise EmitError(f"bare string {x!r} where a value was expected")
        return Const(x)
    k, v = _op(x)
    if k == "$literal":
        return Const(v)
    if k == "$cond":
        return Cond(read_bool(v[0], lets), read_value(v[1], lets), read_value(v[2], lets))
    if k == "$let":
        return _read_described(v["vars"]["mlg"]["$literal"])
    return BoolDef(read_bool(x, lets))


def read_bool(x: Any, lets: frozenset = frozenset()):
    k, v = _op(x)
    if k == "$eq":
        return Eq(read_value(v[0], lets), read_value(v[1], lets))
    if k == "$setIsSubset":
        return SubsetEq(read_value(v[0], lets), read_value(v[1], lets))
    if k in ("$gt", "$gte", "$lt", "$lte"):
        return Compare(k[1:], read_value(v[0], lets), read_value(v[1], lets))
    if k == "$ne" and isinstance(v[0], dict) and "$type" in v[0] and v[1] == "missing":
        return Exists(_ref_path(v[0]["$type"], lets))
    if k == "$and":
        return And(tuple(read_bool(i, lets) for i in v))
    if k == "$or":
        return Or(tuple(read_bool(i, lets) for i in v))
    if k == "$not":
        return Not(read_bool(v[0], lets))
    raise EmitError(f"unsupported condition operator {k}")


def _read_described(m: dict):
    op = m.get("op")
    if op == "term":
        flt = None if m["filter"] is None else read_bool(m["filter"])
        return TermExpr(unflatten(m["term"]), parse_path(m["path"]), flt)
    if op == "fact":
        return FactExpr(parse_path(m["path"]))
    if op == "subterm":
        return SubtermExpr(parse_path(m["path"]), m["key"], m["unwrap"])
    if op == "instantiate":
        return InstantiateExpr(parse_path(m["left"]), parse_path(m["right"]))
    if op == "sortkey":
        return SortKeyExpr(m["direction"], parse_path(m["path"]))
    if op == "filter":
        return FilterExpr(parse_path(m["path"]), read_bool(m["cond"]),
                          tuple((parse_path(q), read_value(v)) for q, v in m["lets"]))
    raise EmitError(f"unknown term expression {op!r}")


def _project_items(fields: dict, lets) -> list:
    items = []
    for k, v in fields.items():
        if v == 1 and not isinstance(v, bool):
            items.append(Keep(parse_path(k)))
        else:
            items.append(Set(parse_path(k), read_value(v, lets)))
    return items


def _is_pair_project(raw: Any) -> bool:
    if not isinstance(raw, dict) or list(raw) != ["$project"]:
        return False
    fields = raw["$project"]
    return isinstance(fields, dict) and len(fields) >= 2 and next(iter(fields)) == "_id"


def read_stages(raw: list, lets: frozenset = frozenset()) -> list:
    out, i = [], 0
    while i < len(raw):
        k, v = _op(raw[i])
        if k == "$match":
            out.append(Match(read_bool(v["$expr"], lets)))
        elif k == "$unwind":
            if isinstance(v, dict):
                out.append(UnwindPreserve(_ref_path(v["path"], lets)))
            else:
                out.append(Unwind(_ref_path(v, lets)))
        elif k == "$addFields":
            sets = [Set(parse_path(f), read_value(d, lets)) for f, d in v.items()]
            if i + 1 < len(raw) and _is_pair_project(raw[i + 1]):
                fields = dict(raw[i + 1]["$project"])
                del fields["_id"]
                set_names = {render_path(s.path) for s in sets}
                keeps = [Keep(parse_path(f)) for f in fields if f not in set_names]
                out.append(Project(tuple(keeps + sets)))
                i += 1
            else:
                out.append(Project((Keep(()), *sets)))
        elif k == "$project":
            if v == {"_id": 1}:
                out.append(Project(()))
            else:
                out.append(Project(tuple(_project_items(v, lets))))
        elif k == "$sort":
            out.append(Sort(tuple((ASC if d == 1 else DESC, parse_path(f)) for f, d in v.items())))
        elif k == "$limit":
            out.append(Limit(v))
        elif k == "$lookup":
            out.append(_read_lookup(v, lets))
        elif k == "$graphLookup":
            out.append(_read_graph_lookup(v, lets))
        else:
            raise EmitError(f"unsupported stage {k}")
        i += 1
    return out


def _read_lookup(v: dict, lets: frozenset) -> Lookup:
    names = list(v.get("let", {}))
    specs = tuple((parse_path(n), read_value(d, lets)) for n, d in v.get("let", {}).items())
    raw = list(v["pipeline"])
    inject = {n: "$$" + n for n in names}
    if names and raw and raw[0] == {"$addFields": inject}:
        inner = read_stages(raw[1:])
    else:
        inner = read_stages(raw, frozenset(names))
    return Lookup(parse_path(v["as"]), specs, _source(v["from"]), tuple(inner))


def _read_graph_lookup(v: dict, lets: frozenset) -> GraphLookup:
    starts = v["startWith"]
    starts = starts if isinstance(starts, list) else [starts]
    crit = v.get("restrictSearchWithMatch")
    return GraphLookup(
        as_=parse_path(v["as"]),
        depth_field=parse_path(v["depthField"]) if "depthField" in v else None,
        criterion=TRUE_EXPR if crit is None else read_bool(crit["$expr"], lets),
        starts=tuple(read_value(s, lets) for s in starts),
        connect_to=parse_path(v["connectToField"]),
        connect_from=parse_path(v["connectFromField"]),
        source=_source(v["from"]),
        max_depth=v.get("maxDepth"),
    )


def parse_emitted(text: str) -> Pipeline:
    name, raw = read_script(text)
    return Pipeline(_source(name), tuple(read_stages(raw)))


def normalize_script(text: str) -> str:
    """Script text without comments or whitespace, for golden comparisons."""
    return "".join(tok for _, tok, _ in tokenize_js(text))
