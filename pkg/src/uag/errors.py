"""Exception hierarchy. Each class carries the CLI exit code it maps to."""

from __future__ import annotations


class UagError(Exception):
    exit_code = 1


class ParseError(UagError):
    """Malformed DSL input.

    ``kind`` is one of ``syntax``, ``duplicate-symbol``, ``negative-arity``,
    ``unknown-identifier``, ``arity-mismatch``, ``bad-table``.
    """

    exit_code = 2

    def __init__(self, message: str, kind: str = "syntax", line: int | None = None,
                 col: int | None = None):
        self.kind = kind
        self.line = line
        self.col = col
        where = f"{line}:{col}: " if line is not None else ""
        super().__init__(f"{where}{kind}: {message}")


class CapacityError(UagError):
    exit_code = 3


class NameResolutionError(UagError):
    exit_code = 4


class PreconditionError(UagError):
    exit_code = 5
