"""Exception types shared across the package."""


class UsageError(ValueError):
    """Invalid input or mismatched operands (CLI exit code 2)."""


class ResourceCapError(RuntimeError):
    """A configured resource cap would be exceeded (CLI exit code 3)."""


class NumericError(RuntimeError):
    """A numerical procedure failed to converge or validate."""
