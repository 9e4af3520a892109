"""Exception hierarchy shared by the parser, checker and harness."""

from __future__ import annotations

from typing import Optional, Tuple

Span = Optional[Tuple[int, int]]


class TrilogError(Exception):
    """Base class for every error raised by the package."""

    kind = "error"

    def __init__(self, message: str, span: Span = None):
        self.message = message
        self.span = span
        super().__init__(message)


class ParseError(TrilogError):
    kind = "ParseError"

    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        super().__init__(f"{line}:{column}: {message}", (line, column))


class DuplicateTypeDecl(TrilogError):
    kind = "DuplicateTypeDecl"


class DeclarationError(TrilogError):
    kind = "DeclarationError"


class UndefinedPredicate(TrilogError):
    kind = "UndefinedPredicate"


class ArityMismatch(TrilogError):
    kind = "ArityMismatch"


class MissingSymbol(TrilogError):
    kind = "MissingSymbol"


class UniverseTooLarge(TrilogError):
    kind = "UniverseTooLarge"


class SplitSpaceTooLarge(TrilogError):
    kind = "SplitSpaceTooLarge"


class TypeCheckError(TrilogError):
    """A rejected typing judgement.

    ``expected`` and ``found`` are rendered types (or None) so the CLI can emit
    them verbatim in JSON diagnostics.
    """

    kind = "TypeError"

    def __init__(
        self,
        message: str,
        span: Span = None,
        expected: Optional[str] = None,
        found: Optional[str] = None,
    ):
        self.expected = expected
        self.found = found
        self.predicate: Optional[str] = None
        self.branch: Optional[int] = None
        super().__init__(message, span)


class UnboundVariable(TypeCheckError):
    kind = "UnboundVariable"


class UndeclaredSymbol(TypeCheckError):
    kind = "UndeclaredSymbol"


class ArgumentTypeMismatch(TypeCheckError):
    kind = "ArgumentTypeMismatch"


class UnifyTypeMismatch(TypeCheckError):
    kind = "UnifyTypeMismatch"


class CallArgNotSubtype(TypeCheckError):
    kind = "CallArgNotSubtype"


class MonomorphismViolation(TypeCheckError):
    kind = "MonomorphismViolation"


class BranchTypeError(TypeCheckError):
    kind = "BranchTypeError"


class UnsatisfiableConstraints(TypeCheckError):
    kind = "UnsatisfiableConstraints"


class OccursCheck(TypeCheckError):
    kind = "OccursCheck"


class CyclicCallGraph(TypeCheckError):
    kind = "CyclicCallGraph"


class CalleeIllTyped(TypeCheckError):
    kind = "CalleeIllTyped"


class InvalidDerivation(TypeCheckError):
    kind = "InvalidDerivation"


class SoundnessViolation(TrilogError):
    kind = "SoundnessViolation"

    def __init__(self, message: str, report=None):
        self.report = report
        super().__init__(message)
