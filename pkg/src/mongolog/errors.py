"""Exception hierarchy; each class carries the CLI exit code it maps to."""
from __future__ import annotations


class MongologError(Exception):
    exit_code = 1


class ParseError(MongologError):
    exit_code = 3

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.message = message
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)


class CompileError(MongologError):
    exit_code = 4


class EvalError(MongologError):
    exit_code = 5


class ResolutionError(EvalError):
    """A pipeline referenced a collection the database does not have."""


class StoreError(EvalError):
    pass
