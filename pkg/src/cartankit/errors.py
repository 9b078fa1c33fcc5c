"""Exception hierarchy shared by all modules."""


class CartanError(Exception):
    """Base class for library errors."""


class SpaceMismatchError(CartanError, ValueError):
    """Operands live in different triple spaces."""


class UnsupportedOperationError(CartanError):
    """Operation is not defined for the given factor kind."""


class DomainError(CartanError, ValueError):
    """Argument lies on or outside the boundary of the unit ball."""


class SingularityError(CartanError, ArithmeticError):
    """An operator that must be inverted is singular or too close to singular."""


class ValidationError(CartanError, ValueError):
    """An input failed a structural check (tripotency, orthogonality, ...)."""


class DecompositionError(CartanError, ArithmeticError):
    """Numerical failure inside a spectral factorization."""


class FrameAlignmentError(CartanError):
    """Tripotents could not be tracked consistently along a sequence."""


class ConvergenceError(CartanError):
    """An iteration hit its budget. ``last`` holds the final iterate."""

    def __init__(self, message, last=None, iterations=None):
        super().__init__(message)
        self.last = last
        self.iterations = iterations


class FixedPointError(CartanError):
    """The map has (numerically) an interior fixed point."""
