"""Exception types shared across the package."""


class InputError(ValueError):
    """Raised when a caller supplies malformed or out-of-range data."""


class SolverError(RuntimeError):
    """Raised when a numerical routine cannot produce a trustworthy answer."""
