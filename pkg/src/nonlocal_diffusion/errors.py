"""Exception types shared across the package."""


class DomainError(ValueError):
    """A parameter lies outside the range where an operation is defined."""


class UsageError(ValueError):
    """Inputs are individually valid but do not fit together (shapes, grids)."""


class SchemeError(RuntimeError):
    """A discrete structural invariant failed, e.g. a factorization broke down."""


class ConfigError(ValueError):
    """Invalid run configuration.  ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")
