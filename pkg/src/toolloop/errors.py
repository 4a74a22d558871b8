"""Exception types shared across the package.

Every error a caller is expected to handle is a subclass of ToolLoopError,
so CLI and pipeline code can map them onto exit codes / failure buckets
without string matching.
"""

from __future__ import annotations


class ToolLoopError(Exception):
    """Base class for all package errors."""


# --- sequence text / protocol ---


class MalformedDelimiter(ToolLoopError):
    """Delimiter syntax violated (bad label, stray bar, segment out of place)."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at offset {position})")
        self.position = position


class DanglingToolCall(ToolLoopError):
    """A tool-call segment is not followed by a result segment."""


class HopLimitExceeded(ToolLoopError):
    """Sequence contains more tool hops than the caller allows."""


class EmptyInput(ToolLoopError):
    """Empty sequence text."""


class InvariantViolation(ToolLoopError):
    """A structured sequence violates its own invariants and cannot be rendered."""


# --- tools ---


class UnknownTool(ToolLoopError):
    """Tool label is not registered."""


class ToolFailure(ToolLoopError):
    """The tool ran and reported a failure."""


class ToolTimeout(ToolFailure):
    """The tool did not answer within its deadline."""


class EmptyCorpus(ToolLoopError):
    """Index build requested over zero documents."""


class DuplicateDocId(ToolLoopError):
    """Corpus contains the same doc_id twice."""


class EmptyQuery(ToolLoopError):
    """Query produced no tokens."""


# --- formula DSL ---


class FormulaError(ToolLoopError):
    """Base class for formula parse/eval errors."""


class FormulaSyntaxError(FormulaError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at offset {position})")
        self.position = position


class UnknownOperator(FormulaError):
    def __init__(self, name: str):
        super().__init__(f"unknown operator: {name}")
        self.name = name


class ArityError(FormulaError):
    def __init__(self, operator: str, got: int, want: int):
        super().__init__(f"{operator} takes {want} argument(s), got {got}")
        self.operator = operator
        self.got = got
        self.want = want


class MathError(FormulaError):
    """Evaluation hit an undefined operation (division by zero, sqrt of a
    negative, log of a non-positive, overflow)."""


# --- generators ---


class GeneratorError(ToolLoopError):
    """The generator failed to produce a continuation."""


class CapabilityUnsupported(ToolLoopError):
    """Requested operation not supported by this generator."""


class EmptyDataset(ToolLoopError):
    """update() called with no records."""


# --- datasets / pipeline / CLI ---


class ConfigError(ToolLoopError):
    """Invalid configuration value."""


class SchemaError(ToolLoopError):
    def __init__(self, message: str, line: int, field: str = ""):
        loc = f"line {line}" + (f", field {field!r}" if field else "")
        super().__init__(f"{message} ({loc})")
        self.line = line
        self.field = field


class MissingContext(ToolLoopError):
    def __init__(self, ids: list[str]):
        super().__init__(f"records without context: {', '.join(ids) or '(all)'}")
        self.ids = ids


class PersistenceError(ToolLoopError):
    """Run artifacts could not be written or resumed."""
