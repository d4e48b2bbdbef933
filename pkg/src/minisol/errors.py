"""Exception and diagnostic types shared across the pipeline."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass
class Diagnostic:
    """A single frontend complaint, attached to a source position."""

    kind: str  # "SyntaxError" | "NameError" | "TypeError"
    line: int
    col: int
    message: str

    def __str__(self) -> str:
        return f"{self.kind}:{self.line}:{self.col}: {self.message}"


class MiniSolError(Exception):
    """Base class for all errors raised by this package."""


class SourceError(MiniSolError):
    """Parsing/resolution failed; carries the collected diagnostics."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics) or "source error")


class SchemaError(MiniSolError):
    """Malformed AST document."""

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")


class DomainError(MiniSolError):
    """Operation applied outside its defined domain (bad node kinds, div by zero in exact mode, ...)."""


class PatchConflict(MiniSolError):
    """Two patches demanded contradictory insertions at one anchor."""


class ScenarioError(MiniSolError):
    """Malformed scenario file."""


class UnsupportedType(MiniSolError):
    """Integer check requested for a non-integer operand."""


class VmError(MiniSolError):
    """Malformed call into the interpreter (unknown function, bad arity, ...)."""
