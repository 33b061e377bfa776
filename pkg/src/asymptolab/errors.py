"""Exception types shared across the package."""


class InputError(ValueError):
    """Raised when an operation receives arguments outside its contract."""


class ResourceError(RuntimeError):
    """Raised when a computation would exceed a configured resource cap."""
