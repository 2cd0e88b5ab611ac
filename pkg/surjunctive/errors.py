"""Exception hierarchy shared by every surjunctive module."""

from typing import Optional


class SurjunctiveError(Exception):
    """Base error for the workbench."""

    def __init__(self, message: str, error_type: Optional[str] = None):
        super().__init__(message)
        self.error_type = error_type or type(self).__name__


class GroupMismatchError(SurjunctiveError):
    """Operands belong to different groups."""


class GroupOverflowError(SurjunctiveError):
    """A coordinate left the configured exact-integer range."""


class BallSizeLimitError(SurjunctiveError):
    """A ball or dense matrix would exceed the configured cap."""


class ExpressionError(SurjunctiveError):
    """Unparseable group, element or scalar expression."""


class ParameterError(SurjunctiveError):
    """An argument lies outside its domain (negative radius, p < 1, ...)."""


class NonHermitianError(SurjunctiveError):
    """Input to the Hermitian eigensolver is not Hermitian."""


class FunctionalCalculusError(SurjunctiveError):
    """A scalar function is undefined on part of the spectrum."""


class HypothesisError(SurjunctiveError):
    """A precondition of a lemma check does not hold."""


class SolverError(SurjunctiveError):
    """A numerical solver failed."""


class IterationLimitError(SolverError):
    """A solver stopped at its iteration limit."""


class InvariantViolation(SurjunctiveError):
    """An asserted invariant failed during a run."""

    def __init__(self, message: str, invariant: str):
        super().__init__(message, error_type="invariant")
        self.invariant = invariant
