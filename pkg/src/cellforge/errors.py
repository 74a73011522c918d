"""Exception hierarchy shared by all cellforge modules."""

from __future__ import annotations


class CellforgeError(Exception):
    """Base class for every error raised by this package."""


class BranchCutError(CellforgeError):
    """A square root was requested for an enclosure touching the branch cut."""


class DivisionByZeroError(CellforgeError, ZeroDivisionError):
    """A divisor enclosure contains zero, so the quotient is not certified."""


class PrecisionError(CellforgeError):
    """The working precision is too low to separate or certify a quantity."""


class ParseError(CellforgeError, ValueError):
    """Malformed text input (expression, diagram or JSON payload)."""


class TypeMismatchError(CellforgeError, TypeError):
    """Sign strings of two morphisms do not fit the requested operation."""


class IntegrityError(CellforgeError):
    """Bundled or loaded data violates a structural invariant."""


class ConvergenceError(CellforgeError):
    """The numerical solver exhausted its restart budget."""

    def __init__(self, message: str, best_residual: float, best=None):
        super().__init__(message)
        self.best_residual = best_residual
        self.best = best


class UnderdeterminedError(CellforgeError):
    """A linear completion left free directions."""

    def __init__(self, message: str, nullity: int):
        super().__init__(message)
        self.nullity = nullity


class InconsistentError(CellforgeError):
    """A linear completion cannot satisfy every equation."""

    def __init__(self, message: str, worst_residual: float):
        super().__init__(message)
        self.worst_residual = worst_residual


class NoSolutionError(CellforgeError):
    """The requested object does not exist for the given input (e.g. U not of cell type)."""
