"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: ValidationError (and subclasses) -> 2,
StepFailure -> 3, OSError -> 4.
"""


class IsbError(Exception):
    """Base class for all package errors."""


class ValidationError(IsbError):
    """Invalid user input: geometry parameters, config values, model setup."""


class ConfigError(ValidationError):
    """Config file problem. Carries the offending field path when known."""

    def __init__(self, message, path=None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class DomainError(IsbError):
    """Parametric coordinate outside the knot domain."""


class UnsupportedError(IsbError):
    """Requested degree / rule size outside the supported range."""


class GeometryError(IsbError):
    """Degenerate or singular geometry (zero Jacobian, non-conformal faces)."""


class AmbiguousCouplingError(GeometryError):
    """Control points closer than 10x the merge tolerance but not coincident."""


class InvertedElementError(IsbError):
    """Deformation state with non-positive volume ratio; signals step cutback."""


class CondensationError(IsbError):
    """Internal-parameter block could not be factorized."""


class StepFailure(IsbError):
    """Newton iteration did not converge (after any allowed cutback)."""

    def __init__(self, message, history=None):
        self.history = history
        super().__init__(message)
