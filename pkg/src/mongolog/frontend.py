"""Reader for Mongolog programs and queries (an ISO Prolog subset)."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .errors import ParseError
from .goals import (
    FALSE, TRUE, Call, Conj, Disj, EqG, Goal, GroundG, IfThen, IfThenElse, Ignore, LimitG,
    Neg, NeqG, NonvarG, Once, Transitive, Unify, VarG, called_predicates, predicate_key,
)
from .terms import Atom, Compound, Num, Term, Var, is_ground

SYMBOL_CHARS = set("+-*/\\^<>=~:.?@#&$")
SOLO = {";"}

INFIX = {
    ":-": (1200, "xfx"),
    ";": (1100, "xfy"),
    "->": (1050, "xfy"),
    ",": (1000, "xfy"),
    "=": (700, "xfx"),
    "==": (700, "xfx"),
    "\\==": (700, "xfx"),
    "/": (400, "yfx"),
}
PREFIX = {
    ":-": (1200, "fx"),
    "edb": (1150, "fx"),
    "\\+": (900, "fy"),
}
UNSUPPORTED_INFIX = {
    "is": "arithmetic (is/2) is not supported",
    "|": "list syntax is not supported",
}
for _op in ("<", ">", "=<", ">=", "=:=", "=\\=", "+", "-", "*", "mod", "//", "**", "^"):
    UNSUPPORTED_INFIX[_op] = f"arithmetic operator {_op} is not supported"
for _op in ("\\=", "=..", "@<", "@>", "@=<", "@>="):
    UNSUPPORTED_INFIX[_op] = f"operator {_op} is not supported"


@dataclass(frozen=True)
class Token:
    kind: str  # atom, qatom, var, num, punct, end, eof
    value: object
    line: int
    col: int
    layout_before: bool


def tokenize(text: str) -> list[Token]:
    out: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)
    layout = True

    def err(msg):
        raise ParseError(msg, line, col)

    def advance(k):
        nonlocal i, line, col
        for ch in text[i:i + k]:
            if ch == "\n":
                line, col = line + 1, 1
            else:
                col += 1
        i += k

    while i < n:
        ch = text[i]
        if ch.isspace():
            advance(1)
            layout = True
            continue
        if ch == "%":
            j = text.find("\n", i)
            advance((n if j < 0 else j) - i)
            layout = True
            continue
        if text.startswith("/*", i):
            j = text.find("*/", i + 2)
            if j < 0:
                err("unterminated block comment")
            advance(j + 2 - i)
            layout = True
            continue
        start_line, start_col = line, col
        tok = None
        if ch.isdigit() or (ch == "-" and i + 1 < n and text[i + 1].isdigit()
                            and _number_context(out)):
            j = i + 1
            while j < n and text[j].isdigit():
                j += 1
            is_float = False
            if j + 1 < n and text[j] == "." and text[j + 1].isdigit():
                is_float = True
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    is_float = True
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            lexeme = text[i:j]
            tok = ("num", float(lexeme) if is_float else int(lexeme)), j - i
        elif ch == "_" or ch.isupper():
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tok = ("var", text[i:j]), j - i
        elif ch.isalpha():
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tok = ("atom", text[i:j]), j - i
        elif ch == "'":
            j, buf = i + 1, []
            while True:
                if j >= n:
                    err("unterminated quoted atom")
                c = text[j]
                if c == "\\" and j + 1 < n:
                    nxt = text[j + 1]
                    buf.append({"n": "\n", "t": "\t"}.get(nxt, nxt))
                    j += 2
                elif c == "'":
                    if j + 1 < n and text[j + 1] == "'":
                        buf.append("'")
                        j += 2
                    else:
                        j += 1
                        break
                else:
                    buf.append(c)
                    j += 1
            tok = ("qatom", "".join(buf)), j - i
        elif ch == '"' or ch == "`":
            err("strings are not supported")
        elif ch == "!":
            err("the cut (!) is not supported")
        elif ch == "[" or ch == "]":
            err("list syntax is not supported")
        elif ch == "{" or ch == "}":
            err("curly-brace terms are not supported")
        elif ch in "(),|":
            tok = ("punct", ch), 1
        elif ch in SOLO:
            tok = ("atom", ch), 1
        elif ch == "." and (i + 1 >= n or text[i + 1].isspace() or text[i + 1] == "%"):
            tok = ("end", "."), 1
        elif ch in SYMBOL_CHARS:
            j = i + 1
            while j < n and text[j] in SYMBOL_CHARS:
                j += 1
            tok = ("atom", text[i:j]), j - i
        else:
            err(f"unexpected character {ch!r}")
        (kind, value), length = tok
        out.append(Token(kind, value, start_line, start_col, layout))
        advance(length)
        layout = False
    out.append(Token("eof", None, line, col, True))
    return out


def _number_context(out: list[Token]) -> bool:
    """Whether a '-' here can only start a negative number."""
    if not out:
        return True
    prev = out[-1]
    if prev.kind == "punct":
        return prev.value in ("(", ",", "|")
    return prev.kind == "atom" and (prev.value in INFIX or prev.value in PREFIX)


class _Parser:
    def __init__(self, text: str, var_name=None):
        self.toks = tokenize(text)
        self.pos = 0
        self.var_name = var_name or (lambda name: name)

    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def next(self) -> Token:
        tok = self.peek()
        self.pos += 1
        return tok

    def error(self, msg: str, tok: Optional[Token] = None):
        tok = tok or self.peek()
        raise ParseError(msg, tok.line, tok.col)

    def expect(self, kind: str, value=None) -> Token:
        tok = self.next()
        if tok.kind != kind or (value is not None and tok.value != value):
            want = value if value is not None else kind
            got = "end of input" if tok.kind == "eof" else repr(tok.value)
            self.error(f"expected {want!r}, found {got}", tok)
        return tok

    @staticmethod
    def _op_name(tok: Token) -> Optional[str]:
        if tok.kind == "atom" or (tok.kind == "punct" and tok.value in (",", "|")):
            return tok.value
        return None

    def _starts_term(self, tok: Token) -> bool:
        if tok.kind in ("num", "var", "qatom"):
            return True
        if tok.kind == "punct":
            return tok.value == "("
        return tok.kind == "atom" and tok.value not in INFIX

    def parse(self, max_prec: int) -> tuple[Term, int]:
        left, left_prec = self.primary(max_prec)
        while True:
            tok = self.peek()
            name = self._op_name(tok)
            if name is None:
                break
            if name in UNSUPPORTED_INFIX and name not in INFIX:
                self.error(UNSUPPORTED_INFIX[name], tok)
            if name not in INFIX:
                break
            prec, kind = INFIX[name]
            if prec > max_prec:
                break
            left_max = prec if kind == "yfx" else prec - 1
            if left_prec > left_max:
                break
            self.next()
            right, _ = self.parse(prec if kind == "xfy" else prec - 1)
            left, left_prec = Compound(name, (left, right)), prec
        return left, left_prec

    def primary(self, max_prec: int) -> tuple[Term, int]:
        tok = self.next()
        if tok.kind == "num":
            return Num(tok.value), 0
        if tok.kind == "var":
            return Var(self.var_name(tok.value)), 0
        if tok.kind == "punct" and tok.value == "(":
            t, _ = self.parse(1200)
            self.expect("punct", ")")
            return t, 0
        if tok.kind in ("atom", "qatom"):
            name = tok.value
            nxt = self.peek()
            if nxt.kind == "punct" and nxt.value == "(" and not nxt.layout_before:
                self.next()
                args = [self.parse(999)[0]]
                while self.peek().kind == "punct" and self.peek().value == ",":
                    self.next()
                    args.append(self.parse(999)[0])
                self.expect("punct", ")")
                return Compound(name, tuple(args)), 0
            if tok.kind == "atom" and name in PREFIX and self._starts_term(nxt):
                prec, kind = PREFIX[name]
                if prec > max_prec:
                    self.error(f"operator {name} needs parentheses here", tok)
                arg, _ = self.parse(prec if kind == "fy" else prec - 1)
                return Compound(name, (arg,)), prec
            if tok.kind == "atom" and name in UNSUPPORTED_INFIX and name not in INFIX:
                self.error(UNSUPPORTED_INFIX[name], tok)
            return Atom(name), 0
        if tok.kind == "eof":
            self.error("unexpected end of input", tok)
        self.error(f"unexpected {tok.value!r}", tok)

    def read_clause_term(self) -> Optional[Term]:
        if self.peek().kind == "eof":
            return None
        t, _ = self.parse(1200)
        self.expect("end")
        return t


# -- terms to goals ------------------------------------------------------------------


def term_to_goal(t: Term, where: Optional[Token] = None) -> Goal:
    def fail(msg):
        if where is not None:
            raise ParseError(msg, where.line, where.col)
        raise ParseError(msg)

    if isinstance(t, Var):
        fail(f"variable {t.name} in goal position (goals must be fixed at compile time)")
    if isinstance(t, Num):
        fail(f"number {t.value!r} is not a goal")
    if isinstance(t, Atom):
        if t.name == "true":
            return TRUE
        if t.name in ("false", "fail"):
            return FALSE
        return Call(t)
    name, args = t.functor, t.args
    sig = (name, len(args))
    g = lambda x: term_to_goal(x, where)  # noqa: E731
    if sig == (",", 2):
        return Conj(_flat(Conj, g(args[0])) + _flat(Conj, g(args[1])))
    if sig == (";", 2):
        left = args[0]
        if isinstance(left, Compound) and (left.functor, len(left.args)) == ("->", 2):
            return IfThenElse(g(left.args[0]), g(left.args[1]), g(args[1]))
        return Disj(_flat(Disj, g(left)) + _flat(Disj, g(args[1])))
    if sig == ("->", 2):
        return IfThen(g(args[0]), g(args[1]))
    if sig == ("\\+", 1):
        return Neg(g(args[0]))
    if sig == ("=", 2):
        return Unify(*args)
    if sig == ("==", 2):
        return EqG(*args)
    if sig == ("\\==", 2):
        return NeqG(*args)
    if sig == ("var", 1):
        return VarG(args[0])
    if sig == ("nonvar", 1):
        return NonvarG(args[0])
    if sig == ("ground", 1):
        return GroundG(args[0])
    if sig == ("once", 1):
        return Once(g(args[0]))
    if sig == ("ignore", 1):
        return Ignore(g(args[0]))
    if sig == ("limit", 2):
        k = args[1]
        if not isinstance(k, Num) or not isinstance(k.value, int) or k.value < 0:
            fail("limit/2 needs a non-negative integer count")
        return LimitG(g(args[0]), k.value)
    if sig == ("transitive", 1):
        inner = args[0]
        if not isinstance(inner, Compound) or len(inner.args) != 2:
            fail("transitive/1 expects a binary goal such as transitive(p(X, Y))")
        return Transitive(inner.functor, inner.args[0], inner.args[1])
    if sig == ("is", 2):
        fail("arithmetic (is/2) is not supported")
    if sig in ((":-", 2), (":-", 1)):
        fail("unexpected ':-' inside a goal")
    return Call(t)


def _flat(kind, goal) -> tuple:
    return goal.goals if isinstance(goal, kind) else (goal,)


# -- programs --------------------------------------------------------------------------


@dataclass(frozen=True)
class Clause:
    head: Term
    body: Goal


@dataclass
class Program:
    clauses: dict = field(default_factory=dict)  # (name, arity) -> list[Clause]
    edb: set = field(default_factory=set)        # declared (name, arity)
    facts: list = field(default_factory=list)    # ground facts of EDB predicates
    db: object = None

    def is_idb(self, key) -> bool:
        return key in self.clauses

    def is_edb(self, key) -> bool:
        if key in self.edb:
            return True
        return self.db is not None and self.db.has(collection_name(key))

    def with_database(self, db) -> "Program":
        """Program bound to ``db``, with inline EDB facts added to it."""
        for key in self.clauses:
            if db.has(collection_name(key)):
                raise ParseError(
                    f"{key[0]}/{key[1]} is both a stored collection and defined by rules")
        for fact in self.facts:
            db = db.insert_fact(fact)
        for key in self.edb:
            db = db.ensure(collection_name(key))
        return Program(dict(self.clauses), set(self.edb), list(self.facts), db)


def collection_name(key) -> str:
    return f"{key[0]}/{key[1]}"


def _renamer(prefix: str, counter: Iterator[int]):
    def rename(name: str) -> str:
        if name == "_":
            return f"{prefix}G{next(counter)}"
        return prefix + name
    return rename


def _edb_specs(t: Term, tok: Token) -> list:
    if isinstance(t, Compound) and t.functor == "," and len(t.args) == 2:
        return _edb_specs(t.args[0], tok) + _edb_specs(t.args[1], tok)
    if (isinstance(t, Compound) and t.functor == "/" and len(t.args) == 2
            and isinstance(t.args[0], Atom) and isinstance(t.args[1], Num)
            and isinstance(t.args[1].value, int)):
        return [(t.args[0].name, t.args[1].value)]
    raise ParseError("edb declarations look like ':- edb name/arity.'", tok.line, tok.col)


def parse_program(source: str) -> Program:
    counter = itertools.count(1)
    clause_no = itertools.count(1)
    current = {"rename": None}
    parser = _Parser(source, lambda name: current["rename"](name))
    prog = Program()
    pending_facts = []
    while True:
        current["rename"] = _renamer(f"_c{next(clause_no)}_", counter)
        tok = parser.peek()
        t = parser.read_clause_term()
        if t is None:
            break
        if isinstance(t, Compound) and t.functor == ":-" and len(t.args) == 1:
            d = t.args[0]
            if isinstance(d, Compound) and d.functor == "edb" and len(d.args) == 1:
                prog.edb.update(_edb_specs(d.args[0], tok))
                continue
            raise ParseError("unknown directive (only ':- edb name/arity.' is supported)",
                             tok.line, tok.col)
        if isinstance(t, Compound) and t.functor == ":-" and len(t.args) == 2:
            head, body = t.args[0], term_to_goal(t.args[1], tok)
        else:
            head, body = t, TRUE
        if isinstance(head, (Var, Num)):
            raise ParseError("clause head must be an atom or compound term", tok.line, tok.col)
        pending_facts.append((predicate_key(head), Clause(head, body), tok))
    for key, clause, tok in pending_facts:
        if key in prog.edb:
            if clause.body != TRUE or not is_ground(clause.head):
                raise ParseError(f"{key[0]}/{key[1]} is declared edb: only ground facts allowed",
                                 tok.line, tok.col)
            prog.facts.append(clause.head)
        else:
            prog.clauses.setdefault(key, []).append(clause)
    _check_recursion(prog)
    return prog


def _check_recursion(prog: Program) -> None:
    graph = {key: {c for cl in cls for c in called_predicates(cl.body) if c in prog.clauses}
             for key, cls in prog.clauses.items()}
    state: dict = {}

    def visit(node, stack):
        state[node] = 1
        for nxt in sorted(graph.get(node, ())):
            if state.get(nxt) == 1:
                cycle = stack[stack.index(nxt):] + [nxt]
                path = " -> ".join(f"{k[0]}/{k[1]}" for k in cycle)
                raise ParseError(f"recursion detected: {path} (use transitive/1 for closures)")
            if nxt not in state:
                visit(nxt, stack + [nxt])
        state[node] = 2

    for key in sorted(graph):
        if key not in state:
            visit(key, [key])


def parse_query(source: str) -> Goal:
    counter = itertools.count(1)

    def rename(name):
        return f"_G{next(counter)}" if name == "_" else name

    parser = _Parser(source, rename)
    tok = parser.peek()
    if tok.kind == "eof":
        raise ParseError("empty query", tok.line, tok.col)
    t, _ = parser.parse(1200)
    if parser.peek().kind == "end":
        parser.next()
    if parser.peek().kind != "eof":
        parser.error(f"unexpected {parser.peek().value!r} after the query")
    return term_to_goal(t, tok)


def parse_term(source: str) -> Term:
    parser = _Parser(source)
    t, _ = parser.parse(1200)
    if parser.peek().kind == "end":
        parser.next()
    if parser.peek().kind != "eof":
        parser.error(f"unexpected {parser.peek().value!r} after the term")
    return t
