"""Exception hierarchy.

Every domain error carries a stable ``code`` string so the CLI can render
errors deterministically.
"""

from __future__ import annotations


class LogDiffError(Exception):
    """Base class for all domain errors raised by this package."""

    code = "error"

    def __str__(self) -> str:
        msg = super().__str__()
        return f"{self.code}: {msg}" if msg else self.code


class ComponentwiseOrderViolation(LogDiffError):
    code = "componentwise-order-violation"


class IntegralityFailure(LogDiffError):
    """A division guaranteed exact by theory failed; always a program bug."""

    code = "integrality-failure"


class NotPIntegral(LogDiffError):
    code = "not-p-integral"


class NotInvertible(LogDiffError):
    code = "not-invertible"


class BoundExceeded(LogDiffError):
    code = "bound-exceeded"


class CriterionViolated(LogDiffError):
    code = "criterion-violated"


class ArgumentsNotCoprime(LogDiffError):
    code = "arguments-not-coprime"


class ExponentNotInMonoid(LogDiffError):
    code = "exponent-not-in-monoid"


class NotInSpan(LogDiffError):
    code = "not-in-span"


class NotAUnit(LogDiffError):
    code = "not-a-unit"


class OrderIncrease(LogDiffError):
    code = "order-increase"


class OrderMismatch(LogDiffError):
    code = "order-mismatch"


class ChartMismatch(LogDiffError):
    code = "chart-mismatch"


class DeterminantDivisibleByP(LogDiffError):
    code = "determinant-divisible-by-p"


class ChartNotInvertible(LogDiffError):
    code = "chart-not-invertible"


class ArityMismatch(LogDiffError):
    code = "arity-mismatch"


class OperatorSyntaxError(LogDiffError):
    """Expression syntax error with 1-based line/column position."""

    code = "syntax-error"

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class SchemaError(LogDiffError):
    """Malformed JSON document; ``pointer`` locates the offending node."""

    code = "schema-error"

    def __init__(self, pointer: str, message: str):
        super().__init__(f"{pointer}: {message}")
        self.pointer = pointer
