"""Exception hierarchy shared by all finpop modules."""


class FinPopError(Exception):
    """Base class for every error raised by finpop."""


class ParseError(FinPopError):
    """A file or scenario could not be parsed."""

    def __init__(self, message: str, row: int | None = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class SchemaError(ParseError):
    """Input parsed but violates the expected column schema."""


class DimensionError(FinPopError, ValueError):
    """Sizes or lengths are inconsistent."""


class EmptySetError(FinPopError, ValueError):
    """An operation needs a non-empty point multiset or cell."""


class BudgetError(FinPopError):
    """Exhaustive enumeration would exceed the configured budget."""


class ParameterError(FinPopError, ValueError):
    """A parameter violates a stated precondition."""


class InconsistencyError(FinPopError):
    """Declared and observed properties disagree."""


class SchemeError(FinPopError, ValueError):
    """An inclusion scheme is invalid for the given population."""


class DegenerateError(FinPopError, ValueError):
    """A moment or inclusion pattern is degenerate (zero variance, empty sample)."""
