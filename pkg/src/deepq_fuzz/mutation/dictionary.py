"""Token dictionary for the insert-token action.

Tokens are printable ASCII runs harvested from seed files, the way AFL-style
fuzzers build their ``-x`` dictionaries.
"""

import logging
import re
from pathlib import Path

from pydantic import BaseModel, Field, field_validator

from ..models import Input

logger = logging.getLogger(__name__)

PRINTABLE = frozenset(range(0x20, 0x7F))


def _is_printable(token: bytes) -> bool:
    return all(byte in PRINTABLE for byte in token)


class TokenDictionary(BaseModel):
    """Ordered, duplicate-free list of printable ASCII tokens."""

    tokens: list[bytes] = Field(default_factory=list)

    @field_validator("tokens")
    @classmethod
    def _check_tokens(cls, tokens: list[bytes]) -> list[bytes]:
        if len(set(tokens)) != len(tokens):
            raise ValueError("dictionary contains duplicate tokens")
        for token in tokens:
            if not token or not _is_printable(token):
                raise ValueError(f"token {token!r} is not non-empty printable ASCII")
        return tokens

    def __len__(self) -> int:
        return len(self.tokens)


def build_dictionary(
    seeds: list[Input], min_len: int = 4, max_tokens: int = 512
) -> TokenDictionary:
    """Collect maximal printable runs of at least ``min_len`` bytes from the seeds.

    Runs are deduplicated and truncated to ``max_tokens`` in order of first
    occurrence.
    """
    if min_len < 1:
        raise ValueError("min_len must be at least 1")
    if max_tokens < 0:
        raise ValueError("max_tokens must not be negative")
    pattern = re.compile(rb"[\x20-\x7e]{%d,}" % min_len)
    tokens: dict[bytes, None] = {}
    for seed in seeds:
        for match in pattern.finditer(seed):
            if len(tokens) >= max_tokens:
                return TokenDictionary(tokens=list(tokens))
            tokens.setdefault(match.group(), None)
    if not tokens:
        logger.warning(
            "No printable runs of %d+ bytes in %d seed(s); insert_token is a no-op",
            min_len,
            len(seeds),
        )
    return TokenDictionary(tokens=list(tokens))


def _escape(token: bytes) -> str:
    out = []
    for byte in token:
        if byte == 0x5C:
            out.append("\\\\")
        elif byte in PRINTABLE:
            out.append(chr(byte))
        else:
            out.append(f"\\x{byte:02x}")
    return "".join(out)


def _unescape(line: str) -> bytes:
    out = bytearray()
    index = 0
    while index < len(line):
        char = line[index]
        if char != "\\":
            out.append(ord(char))
            index += 1
            continue
        nxt = line[index + 1 : index + 2]
        if nxt == "\\":
            out.append(0x5C)
            index += 2
        elif nxt == "x":
            out.append(int(line[index + 2 : index + 4], 16))
            index += 4
        else:
            raise ValueError(f"bad escape in dictionary line {line!r}")
    return bytes(out)


def save_dictionary(dictionary: TokenDictionary, path: Path) -> None:
    """Write one escaped token per line."""
    Path(path).write_text("".join(_escape(token) + "\n" for token in dictionary.tokens), "ascii")


def load_dictionary(path: Path) -> TokenDictionary:
    """Read a dictionary written by save_dictionary."""
    lines = Path(path).read_text("ascii").splitlines()
    return TokenDictionary(tokens=[_unescape(line) for line in lines if line])
