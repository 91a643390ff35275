"""Error types shared across the toolchain.

Spec-file problems raise SpecError; source-program problems during a run
surface as LexError/ParseError/GenError or as Diagnostic records, never as
crashes of the host process.
"""
from __future__ import annotations


class SpecError(Exception):
    """A user-authored spec file is malformed or inconsistent."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None,
                 conflicts: list | None = None):
        self.message = message
        self.line = line
        self.col = col
        self.conflicts = conflicts or []
        where = f" at {line}:{col}" if line is not None and col is not None else (
            f" at line {line}" if line is not None else "")
        super().__init__(message + where)


class LexError(Exception):
    """No rule matches at the current source position."""

    def __init__(self, line: int, col: int, char: str):
        self.line = line
        self.col = col
        self.char = char
        super().__init__(f"no rule matches {char!r} at {line}:{col}")


class ParseError(Exception):
    """A token sequence is rejected by the parse table."""

    def __init__(self, line: int, col: int, found: str, expected: list[str]):
        self.line = line
        self.col = col
        self.found = found
        self.expected = list(expected)
        super().__init__(
            f"unexpected {found} at {line}:{col}, expected one of: " + ", ".join(expected))


class GenError(Exception):
    """A code template could not be applied to the decorated tree."""

    def __init__(self, line: int, col: int, reason: str):
        self.line = line
        self.col = col
        self.reason = reason
        super().__init__(f"{reason} at {line}:{col}")
