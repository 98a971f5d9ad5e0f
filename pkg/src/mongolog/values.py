"""JSON values, trees, forests and the MongoDB default ordering.

Values are plain Python JSON data (None, bool, int, float, str, list, dict)
plus the ``UNDEFINED`` sentinel for absent paths.  Values are treated as
immutable: every helper here returns fresh containers along the modified
spine and shares everything else.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cmp_to_key
from typing import Any, Iterable, Sequence

Path = tuple[str, ...]
EPSILON: Path = ()

ASC = "+"
DESC = "-"


class _Undefined:
    __slots__ = ()

    def __repr__(self) -> str:
        return "UNDEFINED"

    def __bool__(self) -> bool:
        return False

    def __reduce__(self):
        return "UNDEFINED"


UNDEFINED: Any = _Undefined()


def is_undefined(value: Any) -> bool:
    return value is UNDEFINED


def parse_path(text: str) -> Path:
    """``"a.b"`` -> ``("a", "b")``; the empty string is the empty path."""
    if text == "":
        return EPSILON
    return tuple(text.split("."))


def render_path(path: Path) -> str:
    return ".".join(path)


def as_path(p: str | Sequence[str]) -> Path:
    if isinstance(p, str):
        return parse_path(p)
    return tuple(p)


@dataclass(frozen=True)
class Tree:
    """A document plus the sort label attached by sort stages."""

    root: dict
    sort_label: tuple = field(default=())

    def with_root(self, root: dict) -> "Tree":
        return Tree(root, self.sort_label)


Forest = list


def forest(roots: Iterable[dict]) -> list[Tree]:
    return [Tree(r) for r in roots]


def roots(trees: Iterable[Tree]) -> list[dict]:
    return [t.root for t in trees]


# -- tree navigation -------------------------------------------------------


def subtree(value: Any, path: Path) -> Any:
    """Value reached through ``path``.

    Crossing an array maps the rest of the path over its elements and
    collects the defined results; nothing defined gives ``UNDEFINED``.
    """
    if isinstance(value, Tree):
        value = value.root
    for i, key in enumerate(path):
        if isinstance(value, dict):
            if key not in value:
                return UNDEFINED
            value = value[key]
        elif isinstance(value, list):
            rest = path[i:]
            found = [r for r in (subtree(el, rest) for el in value if isinstance(el, (dict, list)))
                     if r is not UNDEFINED]
            return found if found else UNDEFINED
        else:
            return UNDEFINED
    return value


def attach(path: Path, value: Any) -> dict:
    if not path:
        if not isinstance(value, dict):
            raise ValueError("attach at the empty path needs an object value")
        return value
    for key in reversed(path):
        value = {key: value}
    return value


def set_path(root: dict, path: Path, value: Any) -> dict:
    """Copy of ``root`` with ``value`` written at ``path`` (replacing, not merging)."""
    if not path:
        if not isinstance(value, dict):
            raise ValueError("cannot replace the root with a non-object")
        return value
    head, rest = path[0], path[1:]
    out = dict(root)
    if rest:
        child = root.get(head)
        out[head] = set_path(child if isinstance(child, dict) else {}, rest, value)
    else:
        out[head] = value
    return out


def array_of(trees: Iterable[Tree | dict], path: Path = EPSILON) -> list:
    out = []
    for t in trees:
        v = subtree(t, path)
        if v is not UNDEFINED:
            out.append(v)
    return out


def merge(t1: Any, t2: Any) -> Any:
    """Recursive union of two trees; the right side wins on conflicts."""
    if isinstance(t1, dict) and isinstance(t2, dict):
        out = dict(t1)
        for k, v in t2.items():
            out[k] = merge(t1[k], v) if k in t1 else v
        return out
    return t2


# -- equality and ordering --------------------------------------------------


def _is_number(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def deep_equal(a: Any, b: Any) -> bool:
    """Structural equality; numbers compare by value, booleans are not numbers."""
    if a is UNDEFINED or b is UNDEFINED:
        return a is b
    if _is_number(a) and _is_number(b):
        return a == b
    if isinstance(a, bool) or isinstance(b, bool):
        return isinstance(a, bool) and isinstance(b, bool) and a == b
    if isinstance(a, list) and isinstance(b, list):
        return len(a) == len(b) and all(deep_equal(x, y) for x, y in zip(a, b))
    if isinstance(a, dict) and isinstance(b, dict):
        return a.keys() == b.keys() and all(deep_equal(a[k], b[k]) for k in a)
    if type(a) is not type(b):
        return False
    return a == b


# null < numbers < texts < booleans < objects < arrays
def _rank(v: Any) -> int:
    if v is None or v is UNDEFINED:
        return 0
    if isinstance(v, bool):
        return 3
    if _is_number(v):
        return 1
    if isinstance(v, str):
        return 2
    if isinstance(v, dict):
        return 4
    if isinstance(v, list):
        return 5
    raise TypeError(f"not a JSON value: {v!r}")


def _sign(x: Any, y: Any) -> int:
    return (x > y) - (x < y)


def compare_default(a: Any, b: Any) -> int:
    """Three-way comparison under the MongoDB default order (-1, 0, 1).

    Arrays compare by their smallest element in both directions; the empty
    array sorts below every non-empty one.
    """
    ra, rb = _rank(a), _rank(b)
    if ra != rb:
        return _sign(ra, rb)
    if ra == 0:
        return 0
    if ra in (1, 2, 3):
        return _sign(a, b)
    if ra == 4:
        ka, kb = sorted(a), sorted(b)
        for x, y in zip(ka, kb):
            if x != y:
                return _sign(x, y)
            c = compare_default(a[x], b[y])
            if c:
                return c
        return _sign(len(ka), len(kb))
    if not a or not b:
        return _sign(bool(a), bool(b))
    return compare_default(min_element(a), min_element(b))


def min_element(values: list) -> Any:
    best = values[0]
    for v in values[1:]:
        if compare_default(v, best) < 0:
            best = v
    return best


def compare_sort_labels(l1: Sequence, l2: Sequence) -> int:
    for (d1, v1), (d2, v2) in zip(l1, l2):
        c = compare_default(v1, v2)
        if d1 == DESC:
            c = -c
        if c:
            return c
    return _sign(len(l1), len(l2))


sort_label_key = cmp_to_key(compare_sort_labels)
default_key = cmp_to_key(compare_default)


# -- serialization ------------------------------------------------------------


def dumps(value: Any, **kw) -> str:
    """JSON text with sorted object keys."""
    if value is UNDEFINED:
        raise ValueError("UNDEFINED has no JSON rendering")
    return json.dumps(value, sort_keys=True, **kw)


def loads(text: str) -> Any:
    return json.loads(text)


def check_keys(value: Any, allow_dotted: bool = False) -> None:
    """Reject keys containing the path separator (and stray UNDEFINEDs)."""
    if value is UNDEFINED:
        raise ValueError("UNDEFINED cannot be stored")
    if isinstance(value, dict):
        for k, v in value.items():
            if not allow_dotted and "." in k:
                raise ValueError(f"key {k!r} contains '.'")
            check_keys(v)
    elif isinstance(value, list):
        for v in value:
            check_keys(v)
