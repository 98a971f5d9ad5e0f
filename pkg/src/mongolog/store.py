"""File-backed EDB store.

A database is a directory of JSON Lines files.  ``hasPart.2.jsonl`` holds
the term documents of the collection ``hasPart/2``; any other ``name.jsonl``
is loaded verbatim as a plain collection ``name`` (handy for raw pipeline
fixtures).
"""
from __future__ import annotations

import json
import re
from pathlib import Path as FsPath
from typing import Iterable, Mapping

from .errors import StoreError
from .terms import INDEX_KEY, Atom, Compound, Term, flatten, is_ground
from .values import check_keys, dumps

TERM_FILE = re.compile(r"^(?P<functor>.+)\.(?P<arity>\d+)\.jsonl$")
TERM_COLLECTION = re.compile(r"^(?P<functor>.+)/(?P<arity>\d+)$")


def c_one() -> list[dict]:
    return [{"_id": 1}]


def term_document(fact: Term, doc_id=None) -> dict:
    if not is_ground(fact):
        raise StoreError(f"facts must be ground: {fact}")
    if not isinstance(fact, (Atom, Compound)):
        raise StoreError(f"facts must be atoms or compound terms: {fact}")
    doc = {} if doc_id is None else {"_id": doc_id}
    for e in flatten(fact):
        doc[e["k"]] = e["v"]
    return doc


def fact_collection(fact: Term) -> str:
    if isinstance(fact, Atom):
        return f"{fact.name}/0"
    return f"{fact.functor}/{len(fact.args)}"


def _next_id(docs: list[dict]) -> int:
    ids = [d["_id"] for d in docs if isinstance(d.get("_id"), int) and not isinstance(d["_id"], bool)]
    return max(ids, default=0) + 1


def validate_collection(name: str, docs: list[dict]) -> None:
    seen = set()
    m = TERM_COLLECTION.match(name)
    for i, d in enumerate(docs, 1):
        if not isinstance(d, dict):
            raise StoreError(f"{name}: document {i} is not an object")
        key = json.dumps(d.get("_id"), sort_keys=True)
        if key in seen:
            raise StoreError(f"{name}: duplicate _id {d.get('_id')!r}")
        seen.add(key)
        if m is None:
            try:
                check_keys(d)
            except ValueError as e:
                raise StoreError(f"{name}: document {i}: {e}") from None
            continue
        functor, arity = m["functor"], int(m["arity"])
        for k, v in d.items():
            if k == "_id":
                continue
            if not INDEX_KEY.match(k):
                raise StoreError(f"{name}: document {i} has non-index key {k!r}")
            if isinstance(v, (dict, list)):
                raise StoreError(f"{name}: document {i} stores a non-atomic value at {k!r}")
            top = int(k.split(".")[0])
            if top > arity:
                raise StoreError(f"{name}: document {i} has argument {top} beyond arity {arity}")
        if d.get("0") != functor:
            raise StoreError(f"{name}: document {i} has functor {d.get('0')!r}, expected {functor!r}")


class Database:
    """Immutable mapping from collection names to lists of documents."""

    def __init__(self, collections: Mapping[str, Iterable[dict]] | None = None):
        self._colls = {name: list(docs) for name, docs in (collections or {}).items()}
        for name, docs in self._colls.items():
            validate_collection(name, docs)

    def collection(self, name: str) -> list[dict]:
        return self._colls[name]

    def __getitem__(self, name: str) -> list[dict]:
        return self._colls[name]

    def has(self, name: str) -> bool:
        return name in self._colls

    def names(self) -> list[str]:
        return sorted(self._colls)

    def __eq__(self, other) -> bool:
        return isinstance(other, Database) and self._colls == other._colls

    def __repr__(self) -> str:
        sizes = ", ".join(f"{n}: {len(d)}" for n, d in sorted(self._colls.items()))
        return f"Database({sizes})"

    def ensure(self, name: str) -> "Database":
        if name in self._colls:
            return self
        return Database({**self._colls, name: []})

    def insert(self, name: str, doc: dict) -> "Database":
        docs = self._colls.get(name, [])
        if "_id" not in doc:
            doc = {"_id": _next_id(docs), **doc}
        return Database({**self._colls, name: docs + [doc]})

    def insert_fact(self, fact: Term) -> "Database":
        name = fact_collection(fact)
        docs = self._colls.get(name, [])
        return Database({**self._colls, name: docs + [term_document(fact, _next_id(docs))]})


def insert_fact(db: Database, fact: Term) -> Database:
    return db.insert_fact(fact)


def _collection_for_file(path: FsPath) -> str:
    m = TERM_FILE.match(path.name)
    if m:
        return f"{m['functor']}/{m['arity']}"
    return path.name[: -len(".jsonl")]


def _file_for_collection(name: str) -> str:
    m = TERM_COLLECTION.match(name)
    if m:
        return f"{m['functor']}.{m['arity']}.jsonl"
    return f"{name}.jsonl"


def load_database(directory) -> Database:
    root = FsPath(directory)
    if not root.is_dir():
        raise StoreError(f"database directory {str(root)!r} does not exist")
    colls: dict[str, list[dict]] = {}
    for path in sorted(root.glob("*.jsonl")):
        docs: list[dict] = []
        with path.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    doc = json.loads(line)
                except json.JSONDecodeError as e:
                    raise StoreError(f"{path}:{lineno}: malformed JSON ({e.msg})") from None
                if not isinstance(doc, dict):
                    raise StoreError(f"{path}:{lineno}: expected a JSON object")
                docs.append(doc)
        for doc in docs:
            if "_id" not in doc:
                doc["_id"] = _next_id(docs)
        try:
            validate_collection(_collection_for_file(path), docs)
        except StoreError as e:
            raise StoreError(f"{path}: {e}") from None
        colls[_collection_for_file(path)] = docs
    return Database(colls)


def save_database(db: Database, directory) -> None:
    root = FsPath(directory)
    root.mkdir(parents=True, exist_ok=True)
    for name in db.names():
        lines = [dumps(d) for d in db.collection(name)]
        (root / _file_for_collection(name)).write_text("".join(l + "\n" for l in lines), encoding="utf-8")
