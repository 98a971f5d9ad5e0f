"""Prolog terms and their flattened array encoding.

A flattened term is a list of element objects ``{"k": key, "v": value}`` for
constants and ``{"k": key, "n": name}`` for unbound variables.  Keys are
packed argument positions ("0" is the functor, "2.1" the first argument of
the second argument).  A bare constant or variable sits at key "0"; since a
compound never has a variable at "0", a variable element keyed "0" always
stands for the whole term.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any, Iterable, Union

from .values import UNDEFINED, EPSILON, Path, deep_equal, subtree

INDEX_KEY = re.compile(r"^\d+(\.\d+)*$")


@dataclass(frozen=True)
class Atom:
    name: str

    def __str__(self) -> str:
        from .printer import term_text
        return term_text(self)


@dataclass(frozen=True)
class Num:
    value: int | float

    def __str__(self) -> str:
        return repr(self.value)


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Compound:
    functor: str
    args: tuple

    def __post_init__(self):
        if not self.args:
            raise ValueError("compound terms need at least one argument")

    def __str__(self) -> str:
        from .printer import term_text
        return term_text(self)


Term = Union[Atom, Num, Var, Compound]


@dataclass(frozen=True)
class IndexedVar:
    name: str
    key: str


class FlatTermError(ValueError):
    pass


# -- keys ----------------------------------------------------------------


def key_tuple(key: str) -> tuple[int, ...]:
    return tuple(int(s) for s in key.split(".")) if key else ()


def join_key(prefix: str, key: str) -> str:
    return f"{prefix}.{key}" if prefix else key


def _root_key(prefix: str) -> str:
    return prefix or "0"


def var_prefix(key: str) -> str:
    """Prefix covered by a variable element; the root variable covers all."""
    return "" if key == "0" else key


def has_prefix(key: str, prefix: str) -> bool:
    return not prefix or key == prefix or key.startswith(prefix + ".")


def strip_prefix(key: str, prefix: str) -> str:
    if not prefix:
        return key
    rest = key[len(prefix) + 1:]
    return rest or "0"


def canonical(elems: Iterable[dict]) -> list[dict]:
    return sorted(elems, key=lambda e: key_tuple(e["k"]))


# -- term <-> value --------------------------------------------------------


def constant_value(t: Atom | Num) -> Any:
    return t.name if isinstance(t, Atom) else t.value


def value_term(v: Any) -> Term:
    """Term for a stored binding: a scalar constant or a flat-term array."""
    if isinstance(v, list):
        return unflatten(v)
    if isinstance(v, bool):
        return Atom("true" if v else "false")
    if isinstance(v, (int, float)):
        return Num(v)
    if isinstance(v, str):
        return Atom(v)
    if v is None:
        return Atom("null")
    raise FlatTermError(f"cannot read a term from {v!r}")


def is_ground(t: Term) -> bool:
    if isinstance(t, Var):
        return False
    if isinstance(t, Compound):
        return all(is_ground(a) for a in t.args)
    return True


def term_vars(t: Term) -> list[str]:
    """Variable names in order of first occurrence."""
    seen: dict[str, None] = {}

    def walk(x):
        if isinstance(x, Var):
            seen.setdefault(x.name)
        elif isinstance(x, Compound):
            for a in x.args:
                walk(a)
    walk(t)
    return list(seen)


# -- flatten / unflatten ----------------------------------------------------


def flatten(t: Term, var_root: Path = EPSILON, prefix: str = "", bindings: Any = None) -> list[dict]:
    """Flattened form of ``t``, instantiating variables bound under ``var_root``."""
    bindings = {} if bindings is None else bindings
    out: list[dict] = []
    _flatten(t, var_root, prefix, bindings, out, ())
    return canonical(out)


def _flatten(t, var_root, prefix, bindings, out, stack):
    if isinstance(t, (Atom, Num)):
        out.append({"k": _root_key(prefix), "v": constant_value(t)})
    elif isinstance(t, Var):
        bound = UNDEFINED if t.name in stack else subtree(bindings, var_root + (t.name,))
        if bound is UNDEFINED:
            out.append({"k": _root_key(prefix), "n": t.name})
        elif isinstance(bound, list):
            # compound binding: splice its elements under this position
            for el in bound:
                key = join_key(prefix, el["k"]) if prefix else el["k"]
                if "n" in el and "v" not in el:
                    _flatten(Var(el["n"]), var_root, key if key != "0" else prefix,
                             bindings, out, stack + (t.name,))
                else:
                    out.append({"k": key, "v": el.get("v")})
        else:
            out.append({"k": _root_key(prefix), "v": bound})
    elif isinstance(t, Compound):
        out.append({"k": join_key(prefix, "0"), "v": t.functor})
        for i, a in enumerate(t.args, 1):
            _flatten(a, var_root, join_key(prefix, str(i)), bindings, out, stack)
    else:
        raise TypeError(f"not a term: {t!r}")


def unflatten(elems: list[dict]) -> Term:
    if not elems:
        raise FlatTermError("empty flattened term")
    by_key = {}
    for e in elems:
        k = e.get("k")
        if not isinstance(k, str) or (k and not INDEX_KEY.match(k)):
            raise FlatTermError(f"bad index key {k!r}")
        by_key[k or "0"] = e
    if len(by_key) == 1 and "0" in by_key:
        e = by_key["0"]
        if "v" in e:
            return value_term(e["v"])
        if "n" in e:
            return Var(e["n"])
        raise FlatTermError("element has neither value nor name")
    head = by_key.get("0")
    if head is None or "v" not in head or not isinstance(head["v"], str):
        raise FlatTermError("missing functor element")
    positions = sorted({key_tuple(k)[0] for k in by_key} - {0})
    if positions != list(range(1, len(positions) + 1)):
        raise FlatTermError(f"argument positions {positions} have a gap")
    args = []
    for i in positions:
        p = str(i)
        sub = [{**e, "k": strip_prefix(e["k"], p)} for k, e in by_key.items() if has_prefix(k, p)]
        args.append(unflatten(sub))
    return Compound(head["v"], tuple(args))


def indexed_vars(t: Term) -> list[IndexedVar]:
    """Indexed variables of ``t`` in canonical key order (repeats included)."""
    return [IndexedVar(e["n"], e["k"]) for e in flatten(t) if "n" in e]


def vars_of(t: Term) -> set[IndexedVar]:
    return set(indexed_vars(t))


# -- term expressions --------------------------------------------------------


def elements(value: Any) -> list:
    """Elements of a flat term stored as an array, a term document or a scalar."""
    if value is UNDEFINED:
        return []
    if isinstance(value, list):
        return value
    if isinstance(value, dict) and "k" not in value:
        return fact_elements(value)
    return [value]


def fact_elements(doc: dict) -> list[dict]:
    return canonical({"k": k, "v": v} for k, v in doc.items()
                     if INDEX_KEY.match(k) and v is not None)


def eval_fact(path: Path, tree: Any) -> Any:
    doc = subtree(tree, path)
    if not isinstance(doc, dict):
        return UNDEFINED
    return fact_elements(doc)


def eval_term_expr(t: Term, path: Path, keep, tree: Any) -> list[dict]:
    """``term[t, path, filter]``; ``keep`` is a predicate over elements or None."""
    flat = flatten(t, path, "", tree)
    return flat if keep is None else [e for e in flat if keep(e)]


def subterm_elements(elems: list, prefix: str) -> list[dict]:
    out = []
    for e in elems:
        if not isinstance(e, dict) or not isinstance(e.get("k"), str):
            continue
        if has_prefix(e["k"], prefix):
            item = {"k": strip_prefix(e["k"], prefix)}
            if e.get("v") is not None:
                item["v"] = e["v"]
            if e.get("n") is not None:
                item["n"] = e["n"]
            out.append(item)
    return canonical(out)


def eval_subterm(path: Path, key: str, tree: Any, unwrap: bool = False) -> Any:
    """Subterm at index ``key`` of the flat term at ``path``.

    With ``unwrap`` the result is put in binding form: a bare constant becomes
    its scalar value and a bare unbound variable becomes ``UNDEFINED``.
    """
    found = subterm_elements(elements(subtree(tree, path)), key)
    if not found:
        return UNDEFINED
    if unwrap:
        return binding_form(found)
    return found


def binding_form(flat: list[dict]) -> Any:
    if len(flat) == 1 and flat[0]["k"] == "0":
        return flat[0].get("v", UNDEFINED)
    return flat


def instantiate(left: list, right: list) -> list[dict]:
    """``left ⊣ right``: constants of left plus right's elements under left's variables."""
    consts = [e for e in left if "v" in e]
    var_keys = [var_prefix(e["k"]) for e in left if "v" not in e]
    taken = [e for e in right if any(has_prefix(e["k"], p) for p in var_keys)]
    return canonical(consts + taken)


def eval_instantiate(p1: Path, p2: Path, tree: Any) -> list[dict]:
    return instantiate(elements(subtree(tree, p1)), elements(subtree(tree, p2)))


# -- unification -------------------------------------------------------------


def unify_simplified(t1: Term, t2: Term, bindings: dict | None = None) -> dict | None:
    """Bindings produced by the mutual-instantiation unification, or None.

    Mirrors the compiled unification pipeline: both terms are flattened under
    the current bindings, each is instantiated from the other, the results
    must coincide, every variable position must be present in the result,
    and every variable reads its value back from it. No aliasing: two distinct unbound variables never unify.
    """
    bindings = dict(bindings or {})
    g = {"vars": bindings}
    f1 = flatten(t1, ("vars",), "", g)
    f2 = flatten(t2, ("vars",), "", g)
    i1, i2 = instantiate(f1, f2), instantiate(f2, f1)
    if not deep_equal(i1, i2):
        return None
    ivars = indexed_vars(t1) + indexed_vars(t2)
    # a variable at a position the other term lacks (an arity clash)
    if any(not subterm_elements(i1, var_prefix(iv.key)) for iv in ivars):
        return None
    for name, keys in _repeated(ivars).items():
        first = subterm_elements(i1, var_prefix(keys[0]))
        if any(not deep_equal(first, subterm_elements(i1, var_prefix(k))) for k in keys[1:]):
            return None
    out = dict(bindings)
    for iv in ivars:
        if iv.name in out and iv.name in bindings:
            continue
        found = subterm_elements(i1, var_prefix(iv.key))
        if found:
            v = binding_form(found)
            if v is not UNDEFINED:
                out[iv.name] = v
    return out


def _repeated(ivars: list[IndexedVar]) -> dict[str, list[str]]:
    keys: dict[str, list[str]] = {}
    for iv in ivars:
        keys.setdefault(iv.name, []).append(iv.key)
    return {n: ks for n, ks in keys.items() if len(ks) > 1}


def walk(t: Term, subst: dict) -> Term:
    while isinstance(t, Var) and t.name in subst:
        t = subst[t.name]
    return t


def unify_terms(t1: Term, t2: Term, subst: dict | None = None) -> dict | None:
    """Robinson unification without occurs check; None when not unifiable."""
    subst = dict(subst or {})
    stack = [(t1, t2)]
    while stack:
        a, b = stack.pop()
        a, b = walk(a, subst), walk(b, subst)
        if isinstance(a, Var) and isinstance(b, Var) and a.name == b.name:
            continue
        if isinstance(a, Var):
            subst[a.name] = b
        elif isinstance(b, Var):
            subst[b.name] = a
        elif isinstance(a, Compound) and isinstance(b, Compound):
            if a.functor != b.functor or len(a.args) != len(b.args):
                return None
            stack.extend(zip(a.args, b.args))
        elif isinstance(a, Compound) or isinstance(b, Compound):
            return None
        elif type(a) is not type(b) or not deep_equal(constant_value(a), constant_value(b)):
            return None
    return subst


def rename_term(t: Term, f) -> Term:
    if isinstance(t, Var):
        return Var(f(t.name))
    if isinstance(t, Compound):
        return Compound(t.functor, tuple(rename_term(a, f) for a in t.args))
    return t
