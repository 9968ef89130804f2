"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    """Raised when an input violates an operation's preconditions."""


class SPDViolation(RuntimeError):
    """Raised when a block that must be symmetric positive definite is not.

    Attributes
    ----------
    kernel : ndarray or None
        A (near-)null direction of the offending block when one could be
        computed cheaply, otherwise ``None``.
    """

    def __init__(self, message, kernel=None):
        super().__init__(message)
        self.kernel = kernel


class InvariantViolation(RuntimeError):
    """Raised when a computed object fails one of its documented invariants."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report or {}
