class ParameterError(ValueError):
    """A physical parameter violates its invariant."""


class NoSolutionError(ValueError):
    """An inversion has no solution in the admissible domain."""


class SettleTimeout(RuntimeError):
    """The AGC loop did not reach equilibrium in the allotted time."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class FitError(RuntimeError):
    """A step-response trajectory could not be fitted by a first-order model."""
