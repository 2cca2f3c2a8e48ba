"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid geometry, partition or run configuration."""


class DataError(ValueError):
    """Malformed or physically invalid input data (e.g. a non-positive velocity)."""


class SingularMatrixError(ArithmeticError):
    """A pivot fell below the singularity threshold during factorization."""

    def __init__(self, pivot: int, value: float):
        super().__init__(f"near-zero pivot {value:.3e} at index {pivot}")
        self.pivot = pivot
        self.value = value


class ExtentMismatchError(ValueError):
    """A trace line does not match the receiving grid."""


class MemoryGuardError(MemoryError):
    """A requested problem would exceed the configured memory budget."""
