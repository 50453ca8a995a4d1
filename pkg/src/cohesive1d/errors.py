"""Exception and warning types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the requested function."""


class PoleError(DomainError):
    """Evaluation at a pole of the model function."""


class ModelError(ValueError):
    """Invalid material-model parameters."""


class ToleranceNotMetError(RuntimeError):
    """A root bracket or quadrature could not reach the requested accuracy."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class FullCrackError(ValueError):
    """Requested a finite-opening profile for an opening that is fully cracked."""


class GridMismatchError(ValueError):
    """Arrays that should share a grid have inconsistent sizes."""


class NoWellError(RuntimeError):
    """No damage well deep enough for a blow-up analysis."""


class ConfigError(ValueError):
    """Configuration could not be parsed or failed validation.

    ``errors`` holds every problem found, each as a human-readable string.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


class NonConvergenceWarning(RuntimeWarning):
    """An iterative solver stopped at its iteration cap."""
