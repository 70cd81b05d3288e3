"""MDP state model: windows over a seed input and their numeric encoding."""

from .state import (
    decode_state,
    encode_state,
    extract_state,
    offset_bounds,
    random_offset,
)

__all__ = ["decode_state", "encode_state", "extract_state", "offset_bounds", "random_offset"]
