"""Exception hierarchy. Every class carries the exit code the CLI reports."""
from typing import Optional


class MagicSparseError(Exception):
    exit_code: int = 1


class DomainError(MagicSparseError, ValueError):
    """Argument outside the mathematical domain (phi, t, delta)."""
    exit_code = 2


class SizeLimitError(MagicSparseError, ValueError):
    """A dense object would exceed the configured qubit cap."""
    exit_code = 2

    def __init__(self, what: str, t: int, limit: int):
        self.t = t
        self.limit = limit
        super().__init__(f"{what} requires t <= {limit}, got t={t}")


class DimensionMismatchError(MagicSparseError, ValueError):
    exit_code = 2

    def __init__(self, left: int, right: int):
        self.left = left
        self.right = right
        super().__init__(f"qubit count mismatch: {left} != {right}")


class DecompositionParseError(MagicSparseError, ValueError):
    """Malformed decomposition file; the message names the line or field."""
    exit_code = 2


class DecompositionValidationError(DecompositionParseError):
    """Well-formed file whose contents break a container invariant."""


class ConfigurationError(MagicSparseError):
    exit_code = 3


class InfeasibleConfigError(ConfigurationError):
    def __init__(self, extent: float, gamma: float):
        self.extent = extent
        self.gamma = gamma
        super().__init__(
            f"infeasible configuration: extent {extent:.9g} <= gamma {gamma:.9g}, "
            f"sample count would be nonpositive"
        )


class PostselectionExhaustedError(MagicSparseError):
    exit_code = 3

    def __init__(self, attempts: int, last_gap: Optional[float]):
        self.attempts = attempts
        self.last_gap = last_gap
        gap = "n/a" if last_gap is None else f"{last_gap:.9g}"
        super().__init__(f"post-selection rejected all {attempts} attempts (last norm gap {gap})")


class ValidationFailure(MagicSparseError):
    exit_code = 4
