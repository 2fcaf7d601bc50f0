"""Exception types shared across the package."""


class ArchAdaptError(Exception):
    """Base class for all package errors."""


class DegenerateInput(ArchAdaptError):
    """Too few rows to fit a distribution."""


class InvalidData(ArchAdaptError):
    """Non-finite or otherwise unusable numeric input."""


class NotSPD(ArchAdaptError):
    """Matrix is not symmetric positive definite."""


class DimensionMismatch(ArchAdaptError):
    """Operands live in different dimensions."""


class ParseError(ArchAdaptError):
    """Malformed architecture encoding."""

    def __init__(self, message: str, position: int | None = None):
        if position is not None:
            message = f"{message} (position {position})"
        super().__init__(message)
        self.position = position


class InvalidToken(ArchAdaptError):
    """Token value outside the configured choice set."""


class ShapeError(ArchAdaptError):
    """Architecture does not match the configured unit layout."""


class SpaceTooLarge(ArchAdaptError):
    """Search space exceeds the enumeration cap."""

    def __init__(self, size: int, cap: int):
        super().__init__(f"space size {size} exceeds enumeration cap {cap}")
        self.size = size
        self.cap = cap


class InvalidStep(ArchAdaptError):
    """Step index outside the growth plan."""


class InvalidConfig(ArchAdaptError):
    """Configuration value violates its constraints."""


class NumericalError(ArchAdaptError):
    """Numeric computation failed to produce a usable result."""


class DivisionByZeroShift(ArchAdaptError):
    """Reward requested with a zero distribution shift."""
