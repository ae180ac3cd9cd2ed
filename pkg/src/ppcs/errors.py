from __future__ import annotations


class PPCSError(Exception):
    """Base class for all errors raised by this package."""


class GraphFormatError(PPCSError, ValueError):
    """A line of an input file could not be parsed."""

    def __init__(self, message: str, line_no: int | None = None, source: str | None = None):
        self.line_no = line_no
        self.source = source
        where = ""
        if source:
            where += f"{source}:"
        if line_no is not None:
            where += f"{line_no}:"
        super().__init__(f"{where} {message}".strip())


class RejectedInputError(PPCSError, ValueError):
    """Input parsed fine but violates a model invariant (self-loop, overlap with public data)."""


class UnknownVertexError(PPCSError, KeyError):
    def __init__(self, vertex):
        self.vertex = vertex
        super().__init__(vertex)

    def __str__(self) -> str:
        return f"unknown vertex {self.vertex!r}"


class ContractViolation(PPCSError, ValueError):
    """A precondition of an operation was not met by the caller."""


class IndexFormatError(PPCSError, ValueError):
    """Serialized index is corrupt, of an unsupported version, or built for another graph."""
