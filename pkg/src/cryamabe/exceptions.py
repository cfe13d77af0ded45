"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class DimensionError(ValueError):
    """Points or matrices of incompatible dimension were combined."""


class PoleError(ValueError):
    """A sphere point is too close to the pole removed by the Cayley transform."""


class NonFiniteError(FloatingPointError):
    """An integrand produced a non-finite value.

    The offending sample point is kept in ``point``.
    """

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class ConvergenceError(RuntimeError):
    """An iterative solver stopped without meeting its tolerance."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
