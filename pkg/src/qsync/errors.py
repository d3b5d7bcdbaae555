"""Exception types shared across the package."""


class QsyncError(Exception):
    """Base class for package-specific failures."""


class TruncationError(QsyncError):
    """A Fock-space cutoff is too small to represent the requested state."""


class IntegrationError(QsyncError):
    """The master-equation integrator failed or violated a state invariant."""


class DegenerateSignalError(QsyncError):
    """A correlation window contains a (numerically) constant signal."""


class ConfigError(QsyncError):
    """A run configuration is malformed; ``field`` names the offending entry."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message if field is None else f"field '{field}': {message}")
        self.field = field
