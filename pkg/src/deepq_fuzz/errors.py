"""Exception hierarchy for the fuzzer."""

from typing import Any


class FuzzError(Exception):
    """Base class for all fuzzer errors."""


class WindowRangeError(FuzzError, ValueError):
    """A window or offset request does not fit inside the input."""

    def __init__(self, offset: int, width: int, input_len: int):
        self.offset = offset
        self.width = width
        self.input_len = input_len
        super().__init__(
            f"window out of range: offset={offset}, width={width}, input length={input_len}"
        )


class SeedError(FuzzError):
    """A seed input cannot be used (missing, unreadable or shorter than the state width)."""


class DegenerateInputError(FuzzError):
    """A mutation would produce an empty input."""


class ShapeError(FuzzError, ValueError):
    """A vector does not match the network's expected dimension."""


class WeightFormatError(FuzzError):
    """A weights file is corrupt or its layer dimensions do not chain."""


class NonFiniteError(FuzzError):
    """A target, loss or weight became NaN/Inf."""

    def __init__(self, message: str, snapshot: dict[str, Any] | None = None):
        self.snapshot = snapshot or {}
        super().__init__(message)


class EmptyMemoryError(FuzzError):
    """Sampling was requested from an empty replay memory."""


class TargetEnvironmentError(FuzzError):
    """The target could not be executed at all (missing binary, broken probe channel)."""


class UndefinedCorrelationError(FuzzError):
    """Correlation requested for a series with zero variance."""


class ZeroBaselineError(FuzzError):
    """The baseline arm accumulated no reward, so the quotient is undefined."""


class RunAborted(FuzzError):
    """A fuzz run stopped before completing its generations."""
