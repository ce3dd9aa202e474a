"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class WalkError(Exception):
    exit_code = 1


class ValidationError(WalkError, ValueError):
    """Bad input: out-of-range parameter, non-unitary coin, malformed config."""

    exit_code = 2

    def __init__(self, message, field=None):
        self.field = field
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)


class NumericalError(WalkError, ArithmeticError):
    """A computed quantity failed its consistency check."""

    exit_code = 3


class ContinuationError(NumericalError):
    """Root continuation diverged or ran into another branch."""

    def __init__(self, message, nu=None):
        self.nu = nu
        if nu is not None:
            message = f"{message} (at nu={nu!r})"
        super().__init__(message)


class ResourceError(WalkError, MemoryError):
    exit_code = 4
