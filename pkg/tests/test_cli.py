import io
import json
from collections import Counter

import pytest

from mongolog.cli import cmd_repl, build_parser, run
from mongolog.corpus import db_dir, fixtures_dir
from mongolog.emitter import parse_emitted

PARTS = str(db_dir("parts"))
CONJ = "hasPart(X, Y), hasPart(Y, Z)"


def call(*argv):
    out = io.StringIO()
    code = run(list(argv), out)
    return code, out.getvalue()


def test_query_lines():
    code, text = call("query", "--db", PARTS, "--query", CONJ)
    assert code == 0
    assert text.splitlines() == [
        "X = fridge1, Y = door1, Z = handle1.",
        "X = fridge1, Y = door1, Z = handle2.",
    ]


def test_query_without_bindings():
    assert call("query", "--query", "true") == (0, "true.\n")
    assert call("query", "--query", "false") == (0, "false.\n")


def test_limit_flag():
    _, text = call("query", "--db", PARTS, "--query", CONJ, "--limit", "1")
    assert len(text.splitlines()) == 1


@pytest.mark.parametrize("opt", ["0", "1", "2"])
def test_json_same_at_every_level(opt):
    _, base = call("query", "--db", PARTS, "--query", CONJ, "--json")
    _, text = call("query", "--db", PARTS, "--query", CONJ, "--json", "--opt", opt)
    rows = [json.loads(line) for line in text.splitlines()]
    assert rows[0] == {"X": "fridge1", "Y": "door1", "Z": rows[0]["Z"]}
    assert Counter(text.splitlines()) == Counter(base.splitlines())


def test_json_numbers():
    _, text = call("query", "--query", "X = 2", "--json")
    assert json.loads(text) == {"X": 2}


def test_db_from_environment(monkeypatch):
    monkeypatch.setenv("MONGOLOG_DB", PARTS)
    _, text = call("query", "--query", CONJ)
    assert len(text.splitlines()) == 2


def test_program_file():
    program = str(fixtures_dir() / "programs" / "canfly.pl")
    argv = ("query", "--db", str(db_dir("birds")), "--program", program, "--query", "canFly(X)")
    assert call(*argv) == (0, "X = tweety.\n")


@pytest.mark.parametrize("argv, code", [
    (["query", "--query", "false", "--expect-some"], 1),
    (["query", "--query", "p(("], 3),
    (["query", "--query", "nope(X)"], 4),
    (["query", "--db", "/nonexistent/db", "--query", "true"], 5),
])
def test_exit_codes(argv, code, capsys):
    assert call(*argv)[0] == code
    err = capsys.readouterr().err
    assert err.startswith("mongolog:") if code > 1 else err == ""


def test_usage_error():
    with pytest.raises(SystemExit) as info:
        build_parser().parse_args(["query"])
    assert info.value.code == 2


def test_emit_reads_back():
    code, text = call("emit", "--db", PARTS, "--query", CONJ, "--opt", "1")
    assert code == 0
    assert parse_emitted(text).source.name == "hasPart/2"


def test_check():
    code, text = call("check")
    last = text.splitlines()[-1]
    done, total = map(int, last.split()[0].split("/"))
    assert code == 0 and done == total
    assert all(line.startswith("PASS") for line in text.splitlines()[:-1])


def test_repl():
    stdin = io.StringIO(f"{CONJ}\n;\n\nX = a.\nnope(X).\nfalse.\n")
    out = io.StringIO()
    args = build_parser().parse_args(["repl", "--db", PARTS])
    assert cmd_repl(args, out, stdin) == 0
    text = out.getvalue()
    assert "X = fridge1, Y = door1, Z = handle1 ;" in text
    assert "X = fridge1, Y = door1, Z = handle2." in text
    assert "X = a." in text
    assert "error: unknown predicate nope/1" in text
    assert text.count("false.") == 1


def test_repl_stops_without_semicolon():
    stdin = io.StringIO(f"{CONJ}\n\n")
    out = io.StringIO()
    cmd_repl(build_parser().parse_args(["repl", "--db", PARTS]), out, stdin)
    assert "handle2" not in out.getvalue()
