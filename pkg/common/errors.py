"""Exception hierarchy shared by the engine and the runner."""

from typing import Any


class QCStarError(Exception):
    """Base error. Carries an optional witness payload for reports."""

    def __init__(self, message: str, witness: dict[str, Any] | None = None) -> None:
        super().__init__(message)
        self.witness = witness or {}


class NonHermitian(QCStarError):
    """Imaginary part exceeds the hermitian tolerance."""

    pass


class DomainError(QCStarError):
    """Scalar function undefined at some value."""

    pass


class InvariantViolation(QCStarError):
    """A type invariant does not hold."""

    pass


class NotQuasiPositive(QCStarError):
    """Operation requires a quasi-positive element."""

    pass


class NotInClass(QCStarError):
    """Function is in no C_k class with k <= n."""

    pass


class NotMultipliable(QCStarError):
    """Regularized products do not converge."""

    pass


class FClassViolation(QCStarError):
    """Function fails the declared decay order."""

    pass


class NotPositive(QCStarError):
    """Form kernel has a negative eigenvalue."""

    pass


class NotInvariant(QCStarError):
    """Form violates phi(ax, y) = phi(x, a* y)."""

    pass


class NotContinuous(QCStarError):
    """No seminorm bounds the form."""

    pass


class UnboundedOnSupport(QCStarError):
    """Element is infinite where the form has positive weight."""

    pass


class SpanInput(QCStarError):
    """Input lies outside the wedge of mixed elements."""

    pass


class SchemaError(QCStarError):
    """Model file does not match the schema."""

    def __init__(
        self,
        message: str,
        line: int | None = None,
        column: int | None = None,
        path: str = "",
    ) -> None:
        super().__init__(message, {"line": line, "column": column, "path": path})
        self.line = line
        self.column = column
        self.path = path

    def __str__(self) -> str:
        where = f"line {self.line}, column {self.column}" if self.line else "unknown position"
        field = f" at '{self.path}'" if self.path else ""
        return f"{self.args[0]} ({where}{field})"
