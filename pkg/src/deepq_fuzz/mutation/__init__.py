"""Mutation engine: token dictionary, object boundaries and the action set."""

from .actions import MutationResult, apply_action, locate_object_bounds
from .dictionary import TokenDictionary, build_dictionary, load_dictionary, save_dictionary

__all__ = [
    "MutationResult",
    "TokenDictionary",
    "apply_action",
    "build_dictionary",
    "load_dictionary",
    "locate_object_bounds",
    "save_dictionary",
]
