"""Exception hierarchy.

Domain errors (bad inputs, violated preconditions) and numerical errors
(singular systems, failed iterations) are kept distinct so the CLI can map
them to different exit codes.
"""


class TorusGraphError(Exception):
    """Base class for all package errors."""


class DomainError(TorusGraphError, ValueError):
    """Invalid input: violated precondition, bad shape, out-of-range value."""


class DegenerateDataError(DomainError):
    """Data admits no answer (e.g. zero denominator in a correlation)."""


class UnidentifiedMeanError(DomainError):
    """Mean direction requested for a node with zero concentration."""


class FamilyScopeError(DomainError):
    """Operation called outside the model family it is derived for."""


class ParseError(DomainError):
    """Malformed input file; carries row/column location when known."""

    def __init__(self, message, row=None, column=None):
        loc = ""
        if row is not None:
            loc = f" (row {row}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + loc)
        self.row = row
        self.column = column


class SchemaError(TorusGraphError, ValueError):
    """JSON document does not match its declared schema (a usage error)."""


class NumericalError(TorusGraphError, ArithmeticError):
    """Numerical failure: ill-conditioning, non-convergence, degenerate test."""


class SingularMomentsError(NumericalError):
    """Empirical moment matrix is singular or too ill-conditioned to solve."""


class DegenerateTestError(NumericalError):
    """Test covariance block is singular."""


class ConvergenceError(NumericalError):
    """Iterative solver failed to converge within its iteration budget."""
