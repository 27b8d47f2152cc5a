"""Exception hierarchy.

Configuration/input problems derive from ``ValueError``; numerical
breakdowns derive from :class:`NumericalError` (CLI exit code 3).
"""


class DimensionError(ValueError):
    """Operand shapes are inconsistent."""


class ConventionError(ValueError):
    """Superoperators built with different vectorization orders were mixed."""


class NumericalError(ArithmeticError):
    """Base class for numerical failures."""


class ConvergenceError(NumericalError):
    def __init__(self, message, best_residual=None):
        super().__init__(message)
        self.best_residual = best_residual


class DefectiveError(NumericalError):
    """Eigenbasis is (nearly) incomplete; usually means an exceptional point is close."""

    def __init__(self, message, condition_number):
        super().__init__(message)
        self.condition_number = condition_number


class PerturbationError(NumericalError):
    """First-order perturbation theory breaks down (degenerate denominators)."""

    def __init__(self, message, min_gap):
        super().__init__(message)
        self.min_gap = min_gap


class NotCompletelyPositiveError(NumericalError):
    def __init__(self, message, deficit):
        super().__init__(message)
        self.deficit = deficit


class InfeasibleSchemeError(ValueError):
    """A Kraus set cannot be realized by the requested circuit scheme."""

    def __init__(self, message, deviation, detail=None):
        super().__init__(message)
        self.deviation = deviation
        self.detail = detail


class InfeasibleFitError(NumericalError):
    """The fidelity-matching equation has no root in the profile domain."""
