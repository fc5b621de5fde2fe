"""Exception types raised by afcopt."""


class AfcError(Exception):
    """Base class for all afcopt errors."""


class InvalidShape(AfcError, ValueError):
    """A tooth shape or line-shape kernel violates its construction invariants."""


class BoundViolation(InvalidShape):
    """A composite shape exceeds the maximum absorption it is allowed."""


class DomainError(AfcError, ValueError):
    """An argument lies outside the domain of a closed-form expression."""


class QuadratureFailure(AfcError, ArithmeticError):
    """Adaptive quadrature exhausted its refinement budget."""


class DegenerateShape(AfcError, ValueError):
    """The first Fourier coefficient is too small for its phase to be meaningful."""


class OptimizationFailure(AfcError, ArithmeticError):
    """A one-dimensional maximization could not bracket its optimum."""


class InfeasibleArea(AfcError, ValueError):
    """No bounded shape on one period can carry the requested area."""


class MonotonicityViolation(AfcError, ValueError):
    """A functional ingredient fails the monotonicity it is required to have."""


class GridTooCoarse(AfcError, ArithmeticError):
    """Refining the simulation grid changed the echo efficiency too much."""


class WindowError(AfcError, ValueError):
    """The sampled time window does not contain the requested echo."""
