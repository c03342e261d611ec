"""Exception types raised across the package."""


class TroopError(Exception):
    """Base class for simulator errors."""


class ValidationError(TroopError, ValueError):
    """Invalid input or configuration."""


class NumericalError(TroopError, ArithmeticError):
    """A numerical procedure failed or produced a non-finite state."""


class FocusSingularityError(NumericalError):
    """Point coincides with a beam focus."""


class OutsideIlluminatedRegionError(NumericalError):
    """No beam cone contains the point."""


class DegenerateSteadyStateError(NumericalError):
    """The pumping generator has a null space of dimension > 1."""

    def __init__(self, dimension, message=None):
        self.dimension = int(dimension)
        super().__init__(message or f"degenerate steady state (null-space dimension {self.dimension})")
