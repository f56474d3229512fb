"""Exception hierarchy shared by the library and the command line front end."""
from __future__ import annotations



class WeightError(Exception):
    """Base class for all library errors."""


class DimensionError(WeightError, ValueError):
    """Dimension mismatch or dimension outside the supported range."""


class NotMonotoneError(WeightError):
    """An operation that requires completely monotone weights got something else."""


class NotSummableError(WeightError):
    """The weights are not (or not certifiably) summable for the requested C."""


class UndecidableError(WeightError):
    """The question cannot be decided from the available information."""


class NumericalError(WeightError, ArithmeticError):
    """Floating point failure: overflow, loss of positivity, failed certification."""


class ParseError(WeightError, ValueError):
    """Malformed weight file or command line value."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)
