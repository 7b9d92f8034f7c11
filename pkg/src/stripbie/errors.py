"""Exception types shared across the package."""


class StripBIEError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(StripBIEError):
    """A point lies outside the domain an operation is defined on."""


class SingularityError(DomainError):
    """Evaluation requested exactly at a singular point of a map."""


class SceneError(StripBIEError):
    """A scene violates a geometric invariant."""


class PackingError(SceneError):
    """Random placement could not fit an inclusion."""


class ResolutionError(StripBIEError):
    """A discretized boundary is too coarse to be trusted."""


class MaskedPointError(DomainError):
    """Field evaluation requested inside an inclusion."""


class ConvergenceError(StripBIEError):
    """The iterative linear solver did not reach its tolerance."""

    def __init__(self, message: str, residual_history=None):
        super().__init__(message)
        self.residual_history = list(residual_history or [])
