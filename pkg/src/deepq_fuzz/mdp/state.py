"""State extraction and encoding.

The agent never sees the whole seed. Each generation it observes a window
x' = input[offset:offset + width] and feeds the window, one float per byte,
to the Q-network.
"""

import numpy as np

from ..errors import WindowRangeError
from ..models import Input, OffsetRegion, StateWindow

BYTE_MAX = 255.0


def extract_state(data: Input, offset: int, width: int) -> StateWindow:
    """Return the window of ``width`` bytes starting at ``offset``.

    Raises:
        WindowRangeError: If the window does not lie fully inside the input.
    """
    if width < 1 or offset < 0 or offset + width > len(data):
        raise WindowRangeError(offset, width, len(data))
    return StateWindow(offset=offset, width=width, data=data[offset : offset + width])


def offset_bounds(
    input_len: int, width: int, region: OffsetRegion = OffsetRegion.FULL
) -> tuple[int, int]:
    """Inclusive range of valid window offsets, optionally restricted to one half.

    A first-half window lies entirely in ``[0, input_len // 2)``; a second-half
    window starts at or after ``input_len // 2``.
    """
    if width < 1 or width > input_len:
        raise WindowRangeError(0, width, input_len)
    low, high = 0, input_len - width
    middle = input_len // 2
    if region is OffsetRegion.FIRST_HALF:
        high = middle - width
    elif region is OffsetRegion.SECOND_HALF:
        low = middle
    if low > high:
        raise WindowRangeError(low, width, input_len)
    return low, high


def random_offset(
    rng: np.random.Generator,
    input_len: int,
    width: int,
    region: OffsetRegion = OffsetRegion.FULL,
) -> int:
    """Draw an offset uniformly from the valid offsets of ``region``."""
    low, high = offset_bounds(input_len, width, region)
    return int(rng.integers(low, high + 1))


def encode_state(window: StateWindow, size: int | None = None, raw: bool = False) -> np.ndarray:
    """Convert a window to the Q-network input vector.

    Bytes map to ``byte / 255`` (or the raw byte value when ``raw`` is set).
    When ``size`` differs from the window width the vector is zero-padded or
    truncated so windows resized by width actions still fit the network.
    """
    values = np.frombuffer(window.data, dtype=np.uint8).astype(np.float64)
    if not raw:
        values /= BYTE_MAX
    if size is None or size == values.size:
        return values
    vector = np.zeros(size, dtype=np.float64)
    keep = min(size, values.size)
    vector[:keep] = values[:keep]
    return vector


def decode_state(vector: np.ndarray, raw: bool = False) -> bytes:
    """Invert encode_state up to quantization."""
    scale = 1.0 if raw else BYTE_MAX
    return np.clip(np.rint(np.asarray(vector) * scale), 0, 255).astype(np.uint8).tobytes()
