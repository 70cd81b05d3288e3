"""Probabilistic string-rewrite actions applied at the observed window.

Every action takes the seed, the window and a seeded generator and returns a
new input; the seed itself is never modified. Window-control actions
(shift/grow/shrink) and ratio actions return the input unchanged and report
how the next observation or the flip ratio should change.
"""

import logging

import numpy as np
from pydantic import BaseModel, ConfigDict

from ..errors import DegenerateInputError, WindowRangeError
from ..models import ActionKind, ActionSpec, Input, ObjectBounds, StateWindow
from .dictionary import TokenDictionary

logger = logging.getLogger(__name__)

FLIP_SCALE_STEP = 2.0


class MutationResult(BaseModel):
    """Outcome of applying one action."""

    model_config = ConfigDict(frozen=True)

    data: bytes
    noop: bool = False
    next_offset: int | None = None
    next_width: int | None = None
    flip_scale: float | None = None


def _open_positions_before(data: bytes, end: int, open_marker: bytes, close_marker: bytes):
    """Yield open-marker positions whose match ends at or before ``end``, nearest first.

    Occurrences of the open marker inside a close marker ("obj" in "endobj")
    are skipped.
    """
    overlap = close_marker.find(open_marker)
    position = data.rfind(open_marker, 0, end)
    while position != -1:
        inside_close = (
            overlap >= 0
            and position >= overlap
            and data.startswith(close_marker, position - overlap)
        )
        if not inside_close:
            yield position
        position = data.rfind(open_marker, 0, position + len(open_marker) - 1)


def _next_open_position(data: bytes, begin: int, open_marker: bytes, close_marker: bytes) -> int:
    overlap = close_marker.find(open_marker)
    position = data.find(open_marker, begin)
    while position != -1:
        inside_close = (
            overlap >= 0
            and position >= overlap
            and data.startswith(close_marker, position - overlap)
        )
        if not inside_close:
            return position
        position = data.find(open_marker, position + 1)
    return -1


def locate_object_bounds(
    data: Input, offset: int, open_marker: bytes = b"obj", close_marker: bytes = b"endobj"
) -> ObjectBounds:
    """Find the object around ``offset``.

    The object starts at the nearest open marker at or before ``offset`` and
    ends just past the first close marker after that start. When no such pair
    brackets the offset the whole input is treated as one object.
    """
    if not 0 <= offset < len(data):
        raise WindowRangeError(offset, 1, len(data))
    whole = ObjectBounds(start=0, end=len(data))
    start = next(
        _open_positions_before(data, offset + len(open_marker), open_marker, close_marker), -1
    )
    if start == -1:
        return whole
    close = data.find(close_marker, start + len(open_marker))
    if close == -1:
        return whole
    end = close + len(close_marker)
    if end <= offset:
        return whole
    return ObjectBounds(start=start, end=end)


def _splice(data: bytes, start: int, end: int, replacement: bytes) -> bytes:
    return data[:start] + replacement + data[end:]


def _bit_flip(data: bytes, window: StateWindow, ratio: float, rng: np.random.Generator) -> bytes:
    bits = rng.random((window.width, 8)) < ratio
    mask = np.packbits(bits, axis=1).ravel()
    flipped = np.frombuffer(window.data, dtype=np.uint8) ^ mask
    return _splice(data, window.offset, window.offset + window.width, flipped.tobytes())


def _shuffle_object_segments(
    data: bytes,
    window: StateWindow,
    rng: np.random.Generator,
    open_marker: bytes,
    close_marker: bytes,
) -> bytes | None:
    bounds = locate_object_bounds(data, window.offset, open_marker, close_marker)
    length = bounds.end - bounds.start
    if length < 3:
        return None
    cuts = np.sort(rng.choice(np.arange(1, length), size=2, replace=False))
    body = data[bounds.start : bounds.end]
    segments = (body[: cuts[0]], body[cuts[0] : cuts[1]], body[cuts[1] :])
    shuffled = b"".join(segments[index] for index in rng.permutation(3))
    return _splice(data, bounds.start, bounds.end, shuffled)


def _shift_offset(
    data: bytes, window: StateWindow, left: bool, open_marker: bytes, close_marker: bytes
) -> int:
    current = locate_object_bounds(data, window.offset, open_marker, close_marker)
    limit = len(data) - window.width
    if left:
        if current.start == 0:
            return 0
        target = locate_object_bounds(data, current.start - 1, open_marker, close_marker).start
    else:
        target = _next_open_position(data, current.end, open_marker, close_marker)
        if target == -1:
            target = limit
    return max(0, min(target, limit))


def _resize(data: bytes, window: StateWindow, delta: int) -> tuple[int, int]:
    width = max(1, min(window.width + delta, len(data)))
    offset = min(window.offset, len(data) - width)
    return offset, width


def apply_action(
    data: Input,
    window: StateWindow,
    action: ActionSpec,
    dictionary: TokenDictionary,
    rng: np.random.Generator,
    *,
    flip_scale: float = 1.0,
    open_marker: bytes = b"obj",
    close_marker: bytes = b"endobj",
) -> MutationResult:
    """Apply one rewrite rule to ``data`` at ``window`` and return the mutant.

    Raises:
        WindowRangeError: If the window does not fit the input.
        DegenerateInputError: If delete_window would empty the input.
        ValueError: If the action is disabled.
    """
    if not action.enabled:
        raise ValueError(f"action {action.name} is disabled")
    if window.offset + window.width > len(data):
        raise WindowRangeError(window.offset, window.width, len(data))

    start, end = window.offset, window.offset + window.width

    match action.kind:
        case ActionKind.BIT_FLIP:
            ratio = min(1.0, action.ratio * flip_scale)
            return MutationResult(data=_bit_flip(data, window, ratio, rng))

        case ActionKind.INSERT_TOKEN:
            if not dictionary.tokens:
                logger.warning("insert_token selected with an empty dictionary; input unchanged")
                return MutationResult(data=data, noop=True)
            token = dictionary.tokens[int(rng.integers(len(dictionary.tokens)))]
            position = int(rng.integers(start, end))
            return MutationResult(data=_splice(data, position, position, token))

        case ActionKind.SHUFFLE_WINDOW:
            shuffled = rng.permutation(np.frombuffer(window.data, dtype=np.uint8)).tobytes()
            return MutationResult(data=_splice(data, start, end, shuffled))

        case ActionKind.SHUFFLE_OBJECT_SEGMENTS:
            shuffled = _shuffle_object_segments(data, window, rng, open_marker, close_marker)
            if shuffled is None:
                return MutationResult(data=data, noop=True)
            return MutationResult(data=shuffled)

        case ActionKind.COPY_WINDOW_INSERT:
            position = int(rng.integers(0, len(data) + 1))
            return MutationResult(data=_splice(data, position, position, window.data))

        case ActionKind.COPY_WINDOW_OVERWRITE:
            position = min(int(rng.integers(0, len(data))), len(data) - window.width)
            return MutationResult(
                data=_splice(data, position, position + window.width, window.data)
            )

        case ActionKind.DELETE_WINDOW:
            if window.width >= len(data):
                raise DegenerateInputError(
                    f"deleting {window.width} bytes would empty a {len(data)}-byte input"
                )
            return MutationResult(data=_splice(data, start, end, b""))

        case ActionKind.SHIFT_OFFSET_LEFT | ActionKind.SHIFT_OFFSET_RIGHT:
            left = action.kind is ActionKind.SHIFT_OFFSET_LEFT
            offset = _shift_offset(data, window, left, open_marker, close_marker)
            return MutationResult(data=data, next_offset=offset, next_width=window.width)

        case ActionKind.GROW_WIDTH | ActionKind.SHRINK_WIDTH:
            delta = action.step if action.kind is ActionKind.GROW_WIDTH else -action.step
            offset, width = _resize(data, window, delta)
            return MutationResult(data=data, next_offset=offset, next_width=width)

        case ActionKind.RAISE_FLIP_RATIO | ActionKind.LOWER_FLIP_RATIO:
            raise_ratio = action.kind is ActionKind.RAISE_FLIP_RATIO
            factor = FLIP_SCALE_STEP if raise_ratio else 1 / FLIP_SCALE_STEP
            return MutationResult(data=data, flip_scale=flip_scale * factor)

    raise ValueError(f"unknown action kind {action.kind}")
