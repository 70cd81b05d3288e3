"""Built-in instrumented document parser used as the default fuzz target.

The grammar is a small subset of PDF: a ``%PDF-x.y`` header, numbered
objects (``N G obj ... endobj``) holding numbers, strings, names, arrays,
dictionaries and streams, a cross-reference table, a trailer, ``startxref``
and ``%%EOF``. Each branch of interest calls ``probe`` with a fixed block id,
so the set of probes hit is the exact basic-block coverage of a run.

Structural damage stops the parse (``rejected_early``) without hitting any
error-specific block, so a truncated or corrupted document never covers
more than the valid one. Checks inside streams and cross-references are
soft: a failed check only misses its probe. Two planted faults (nesting
deeper than MAX_DEPTH, a negative stream length) end the run as
``crashed``.
"""

import re
import time
import zlib
from enum import IntEnum

from ..models import ExecutionTrace, Input, Outcome

MAX_DEPTH = 24
DEADLINE_CHECK_EVERY = 16
MAX_DIGITS = 20  # longer integers reject the document


class Probe(IntEnum):
    """Instrumented basic blocks of the mini-parser."""

    HEADER_CHECK = 1
    HEADER_MAGIC = 2
    HEADER_VERSION = 3
    HEADER_BINARY_MARKER = 4
    COMMENT = 5
    OBJ_HEADER = 10
    OBJ_GENERATION = 11
    OBJ_DUPLICATE = 12
    OBJ_END = 13
    VALUE_INT = 20
    VALUE_REAL = 21
    VALUE_NEGATIVE = 22
    VALUE_LEADING_DOT = 23
    VALUE_STRING = 24
    STRING_ESCAPE = 25
    STRING_NESTED = 26
    STRING_OCTAL = 27
    VALUE_HEXSTRING = 28
    VALUE_NAME = 29
    NAME_ESCAPE = 30
    VALUE_BOOL = 31
    VALUE_NULL = 32
    VALUE_REF = 33
    ARRAY = 34
    ARRAY_EMPTY = 35
    ARRAY_NESTED = 36
    DICT = 37
    DICT_EMPTY = 38
    DICT_NESTED = 39
    OBJ_CATALOG = 40
    OBJ_PAGES = 41
    OBJ_PAGE = 42
    OBJ_FONT = 43
    OBJ_XOBJECT = 44
    OBJ_TYPED_OTHER = 45
    OBJ_UNTYPED = 46
    STREAM_KEYWORD = 50
    STREAM_LENGTH = 51
    STREAM_LENGTH_INDIRECT = 52
    STREAM_END = 53
    STREAM_RAW = 54
    CONTENT_TEXT = 55
    FILTER_HEX = 56
    HEX_DECODED = 57
    FILTER_FLATE = 58
    FLATE_DECODED = 59
    FILTER_UNKNOWN = 60
    XREF_KEYWORD = 70
    XREF_SUBSECTION = 71
    XREF_FREE = 72
    XREF_INUSE = 73
    XREF_VERIFIED = 74
    TRAILER_KEYWORD = 80
    TRAILER_DICT = 81
    TRAILER_SIZE = 82
    TRAILER_ROOT = 83
    TRAILER_INFO = 84
    PAGE_TREE = 85
    STARTXREF = 86
    STARTXREF_MATCH = 87
    EOF_MARKER = 88
    TRAILER_ACCEPTED = 89
    FAULT_DEEP_NESTING = 100
    FAULT_NEGATIVE_LENGTH = 101


# Probes only reachable through planted faults.
FAULT_PROBES = frozenset({Probe.FAULT_DEEP_NESTING, Probe.FAULT_NEGATIVE_LENGTH})

_WS = re.compile(rb"[\x00\t\n\x0c\r ]*")
_NUMBER = re.compile(rb"[+-]?(?:\d+\.\d*|\.\d+|\d+)")
_NAME = re.compile(rb"/([^\x00\t\n\x0c\r ()<>\[\]{}/%]*)")
_NAME_ESCAPE = re.compile(rb"#([0-9A-Fa-f]{2})")
_KEYWORD = re.compile(rb"[A-Za-z]+")
_REF_TAIL = re.compile(rb"[\x00\t\n\x0c\r ]+(\d+)[\x00\t\n\x0c\r ]+R(?![A-Za-z])")
_OBJ_HEADER = re.compile(rb"(\d+)[\t\r\n ]+(\d+)[\t\r\n ]+obj(?![A-Za-z])")
_STRING_SPECIAL = re.compile(rb"[()\\]")
_OCTAL = re.compile(rb"[0-7]{1,3}")
_HEX_BODY = re.compile(rb"[0-9A-Fa-f\x00\t\n\x0c\r ]*>")
_HEADER = re.compile(rb"%PDF-(\d)\.(\d)\r?\n")
_BINARY_LINE = re.compile(rb"%([\x80-\xff]{4,})\r?\n")
_XREF_SUBSECTION = re.compile(rb"(\d+) (\d+)\r?\n")
_XREF_ENTRY = re.compile(rb"(\d{10}) (\d{5}) ([nf])(?: \r| \n|\r\n)")
_EOL = re.compile(rb"\r?\n")


class Name(str):
    """A parsed ``/Name`` value."""


class Ref(tuple):
    """An indirect reference ``N G R``."""

    def __new__(cls, number: int, generation: int):
        return super().__new__(cls, (number, generation))

    @property
    def number(self) -> int:
        return self[0]


class _Stop(Exception):
    def __init__(self, outcome: Outcome):
        self.outcome = outcome


class _Parser:
    def __init__(self, data: bytes, deadline: float | None):
        self.data = data
        self.pos = 0
        self.deadline = deadline
        self.blocks: set[int] = set()
        self.path_length = 0
        self.objects: dict[int, object] = {}
        self.offsets: dict[int, int] = {}

    def probe(self, block: Probe) -> None:
        self.blocks.add(int(block))
        self.path_length += 1

    def reject(self) -> _Stop:
        return _Stop(Outcome.REJECTED_EARLY)

    def crash(self, block: Probe) -> _Stop:
        self.probe(block)
        return _Stop(Outcome.CRASHED)

    def check_deadline(self) -> None:
        if self.deadline is not None and time.perf_counter() > self.deadline:
            raise _Stop(Outcome.TIMED_OUT)

    def skip_ws(self) -> None:
        self.pos = _WS.match(self.data, self.pos).end()

    def skip_ws_and_comments(self) -> None:
        while True:
            self.skip_ws()
            if not self.data.startswith(b"%", self.pos) or self.data.startswith(b"%%EOF", self.pos):
                return
            end = _EOL.search(self.data, self.pos)
            if end is None:
                raise self.reject()
            self.probe(Probe.COMMENT)
            self.pos = end.end()

    def integer(self, text: bytes) -> int:
        if len(text.lstrip(b"+-")) > MAX_DIGITS:
            raise self.reject()
        return int(text)

    def expect_keyword(self, keyword: bytes) -> None:
        self.skip_ws()
        match = _KEYWORD.match(self.data, self.pos)
        if match is None or match.group() != keyword:
            raise self.reject()
        self.pos = match.end()

    # Document structure

    def parse(self) -> None:
        self.probe(Probe.HEADER_CHECK)
        self.check_deadline()
        self.parse_header()
        while True:
            self.skip_ws_and_comments()
            if self.data.startswith(b"xref", self.pos):
                break
            self.parse_object()
            if len(self.objects) % DEADLINE_CHECK_EVERY == 0:
                self.check_deadline()
        xref_offset = self.pos
        self.parse_xref()
        self.parse_trailer(xref_offset)

    def parse_header(self) -> None:
        if not self.data.startswith(b"%PDF-"):
            raise self.reject()
        self.probe(Probe.HEADER_MAGIC)
        match = _HEADER.match(self.data)
        if match is None:
            raise self.reject()
        self.probe(Probe.HEADER_VERSION)
        self.pos = match.end()
        binary = _BINARY_LINE.match(self.data, self.pos)
        if binary is not None:
            self.probe(Probe.HEADER_BINARY_MARKER)
            self.pos = binary.end()

    def parse_object(self) -> None:
        start = self.pos
        header = _OBJ_HEADER.match(self.data, self.pos)
        if header is None:
            raise self.reject()
        number, generation = self.integer(header.group(1)), self.integer(header.group(2))
        self.probe(Probe.OBJ_HEADER)
        if generation:
            self.probe(Probe.OBJ_GENERATION)
        self.pos = header.end()
        value = self.parse_value(depth=0)
        self.skip_ws()
        if isinstance(value, dict) and self.data.startswith(b"stream", self.pos):
            self.parse_stream(value)
        self.expect_keyword(b"endobj")
        self.probe(Probe.OBJ_END)
        if number in self.objects:
            self.probe(Probe.OBJ_DUPLICATE)
        self.objects[number] = value
        self.offsets[number] = start
        self.classify(value)

    def classify(self, value: object) -> None:
        if not isinstance(value, dict):
            return
        kind = value.get("Type")
        match kind:
            case None:
                self.probe(Probe.OBJ_UNTYPED)
            case "Catalog":
                self.probe(Probe.OBJ_CATALOG)
            case "Pages":
                self.probe(Probe.OBJ_PAGES)
            case "Page":
                self.probe(Probe.OBJ_PAGE)
            case "Font":
                self.probe(Probe.OBJ_FONT)
            case "XObject":
                self.probe(Probe.OBJ_XOBJECT)
            case _:
                self.probe(Probe.OBJ_TYPED_OTHER)

    # Values

    def parse_value(self, depth: int) -> object:
        if depth > MAX_DEPTH:
            raise self.crash(Probe.FAULT_DEEP_NESTING)
        self.skip_ws()
        data, pos = self.data, self.pos
        if pos >= len(data):
            raise self.reject()
        head = data[pos : pos + 2]
        if head == b"<<":
            return self.parse_dict(depth)
        if head[:1] == b"<":
            return self.parse_hexstring()
        if head[:1] == b"[":
            return self.parse_array(depth)
        if head[:1] == b"(":
            return self.parse_string()
        if head[:1] == b"/":
            return self.parse_name()
        number = _NUMBER.match(data, pos)
        if number is not None:
            return self.parse_number(number)
        keyword = _KEYWORD.match(data, pos)
        if keyword is not None:
            self.pos = keyword.end()
            match keyword.group():
                case b"true":
                    self.probe(Probe.VALUE_BOOL)
                    return True
                case b"false":
                    self.probe(Probe.VALUE_BOOL)
                    return False
                case b"null":
                    self.probe(Probe.VALUE_NULL)
                    return None
        raise self.reject()

    def parse_number(self, match: re.Match) -> int | float | Ref:
        text = match.group()
        self.pos = match.end()
        if text.isdigit():
            ref = _REF_TAIL.match(self.data, self.pos)
            if ref is not None:
                self.pos = ref.end()
                self.probe(Probe.VALUE_REF)
                return Ref(self.integer(text), self.integer(ref.group(1)))
            self.probe(Probe.VALUE_INT)
            return self.integer(text)
        if text.startswith(b"-"):
            self.probe(Probe.VALUE_NEGATIVE)
        if b"." not in text:
            self.probe(Probe.VALUE_INT)
            return self.integer(text)
        if text.lstrip(b"+-").startswith(b"."):
            self.probe(Probe.VALUE_LEADING_DOT)
        self.probe(Probe.VALUE_REAL)
        return float(text)

    def parse_string(self) -> bytes:
        data = self.data
        pos = self.pos + 1
        depth = 1
        out = bytearray()
        while True:
            special = _STRING_SPECIAL.search(data, pos)
            if special is None:
                raise self.reject()
            out += data[pos : special.start()]
            char = special.group()
            pos = special.end()
            if char == b"\\":
                if pos >= len(data):
                    raise self.reject()
                octal = _OCTAL.match(data, pos)
                if octal is not None:
                    self.probe(Probe.STRING_OCTAL)
                    out.append(int(octal.group(), 8) & 0xFF)
                    pos = octal.end()
                else:
                    self.probe(Probe.STRING_ESCAPE)
                    out.append(data[pos])
                    pos += 1
            elif char == b"(":
                self.probe(Probe.STRING_NESTED)
                depth += 1
                out += char
            else:
                depth -= 1
                if depth == 0:
                    break
                out += char
        self.pos = pos
        self.probe(Probe.VALUE_STRING)
        return bytes(out)

    def parse_hexstring(self) -> bytes:
        body = _HEX_BODY.match(self.data, self.pos + 1)
        if body is None:
            raise self.reject()
        digits = re.sub(rb"[\x00\t\n\x0c\r ]", b"", body.group()[:-1])
        if len(digits) % 2:
            digits += b"0"
        self.pos = body.end()
        self.probe(Probe.VALUE_HEXSTRING)
        return bytes.fromhex(digits.decode("ascii"))

    def parse_name(self) -> Name:
        match = _NAME.match(self.data, self.pos)
        self.pos = match.end()
        raw = match.group(1)
        if b"#" in raw:
            self.probe(Probe.NAME_ESCAPE)
            raw = _NAME_ESCAPE.sub(lambda m: bytes([int(m.group(1), 16)]), raw)
        self.probe(Probe.VALUE_NAME)
        return Name(raw.decode("latin-1"))

    def parse_array(self, depth: int) -> list:
        self.pos += 1
        items = []
        while True:
            self.skip_ws()
            if self.data.startswith(b"]", self.pos):
                self.pos += 1
                break
            item = self.parse_value(depth + 1)
            if isinstance(item, list):
                self.probe(Probe.ARRAY_NESTED)
            items.append(item)
        self.probe(Probe.ARRAY if items else Probe.ARRAY_EMPTY)
        return items

    def parse_dict(self, depth: int) -> dict:
        self.pos += 2
        entries: dict[str, object] = {}
        while True:
            self.skip_ws()
            if self.data.startswith(b">>", self.pos):
                self.pos += 2
                break
            if not self.data.startswith(b"/", self.pos):
                raise self.reject()
            key = self.parse_name()
            value = self.parse_value(depth + 1)
            if isinstance(value, dict):
                self.probe(Probe.DICT_NESTED)
            entries[key] = value
        self.probe(Probe.DICT if entries else Probe.DICT_EMPTY)
        return entries

    # Streams

    def stream_length(self, entries: dict) -> int:
        length = entries.get("Length")
        if isinstance(length, Ref):
            length = self.objects.get(length.number)
            if not isinstance(length, int) or isinstance(length, bool):
                raise self.reject()
            self.probe(Probe.STREAM_LENGTH_INDIRECT)
        elif not isinstance(length, int) or isinstance(length, bool):
            raise self.reject()
        if length < 0:
            raise self.crash(Probe.FAULT_NEGATIVE_LENGTH)
        self.probe(Probe.STREAM_LENGTH)
        return length

    def parse_stream(self, entries: dict) -> None:
        self.pos += len(b"stream")
        eol = _EOL.match(self.data, self.pos)
        if eol is None:
            raise self.reject()
        self.pos = eol.end()
        self.probe(Probe.STREAM_KEYWORD)
        length = self.stream_length(entries)
        content = self.data[self.pos : self.pos + length]
        if len(content) < length:
            raise self.reject()
        self.pos += length
        self.expect_keyword(b"endstream")
        self.probe(Probe.STREAM_END)
        self.decode_stream(entries.get("Filter"), content)

    def decode_stream(self, stream_filter: object, content: bytes) -> None:
        match stream_filter:
            case None:
                self.probe(Probe.STREAM_RAW)
                if b"BT" in content and content.count(b"BT") == content.count(b"ET"):
                    self.probe(Probe.CONTENT_TEXT)
            case "ASCIIHexDecode":
                self.probe(Probe.FILTER_HEX)
                body = content.rstrip()
                if body.endswith(b">"):
                    try:
                        bytes.fromhex(body[:-1].decode("ascii"))
                    except ValueError:
                        return
                    self.probe(Probe.HEX_DECODED)
            case "FlateDecode":
                self.probe(Probe.FILTER_FLATE)
                try:
                    zlib.decompress(content)
                except zlib.error:
                    return
                self.probe(Probe.FLATE_DECODED)
            case _:
                self.probe(Probe.FILTER_UNKNOWN)

    # Cross-reference table and trailer

    def parse_xref(self) -> None:
        self.pos += len(b"xref")
        eol = _EOL.match(self.data, self.pos)
        if eol is None:
            raise self.reject()
        self.pos = eol.end()
        self.probe(Probe.XREF_KEYWORD)
        verified = True
        while (subsection := _XREF_SUBSECTION.match(self.data, self.pos)) is not None:
            self.probe(Probe.XREF_SUBSECTION)
            self.pos = subsection.end()
            first, count = self.integer(subsection.group(1)), self.integer(subsection.group(2))
            for number in range(first, first + count):
                entry = _XREF_ENTRY.match(self.data, self.pos)
                if entry is None:
                    raise self.reject()
                self.pos = entry.end()
                if entry.group(3) == b"f":
                    self.probe(Probe.XREF_FREE)
                    continue
                self.probe(Probe.XREF_INUSE)
                offset = int(entry.group(1))
                verified = verified and self.offsets.get(number) == offset
        if verified and self.offsets:
            self.probe(Probe.XREF_VERIFIED)

    def resolve(self, value: object) -> object:
        return self.objects.get(value.number) if isinstance(value, Ref) else None

    def parse_trailer(self, xref_offset: int) -> None:
        self.skip_ws()
        self.expect_keyword(b"trailer")
        self.probe(Probe.TRAILER_KEYWORD)
        trailer = self.parse_value(depth=0)
        if not isinstance(trailer, dict):
            raise self.reject()
        self.probe(Probe.TRAILER_DICT)
        if trailer.get("Size") == max(self.objects, default=0) + 1:
            self.probe(Probe.TRAILER_SIZE)
        root = self.resolve(trailer.get("Root"))
        if isinstance(root, dict) and root.get("Type") == "Catalog":
            self.probe(Probe.TRAILER_ROOT)
            self.walk_pages(root)
        if isinstance(self.resolve(trailer.get("Info")), dict):
            self.probe(Probe.TRAILER_INFO)

        self.expect_keyword(b"startxref")
        self.probe(Probe.STARTXREF)
        self.skip_ws()
        number = _NUMBER.match(self.data, self.pos)
        if number is None or not number.group().isdigit():
            raise self.reject()
        self.pos = number.end()
        if self.integer(number.group()) == xref_offset:
            self.probe(Probe.STARTXREF_MATCH)
        self.skip_ws()
        if not self.data.startswith(b"%%EOF", self.pos):
            raise self.reject()
        self.probe(Probe.EOF_MARKER)
        self.probe(Probe.TRAILER_ACCEPTED)

    def walk_pages(self, root: dict) -> None:
        pages = self.resolve(root.get("Pages"))
        if not isinstance(pages, dict) or pages.get("Type") != "Pages":
            return
        kids = pages.get("Kids")
        if not isinstance(kids, list) or not kids:
            return
        for kid in kids:
            page = self.resolve(kid)
            if not isinstance(page, dict) or page.get("Type") != "Page":
                return
        if pages.get("Count") == len(kids):
            self.probe(Probe.PAGE_TREE)


def builtin_miniparser(data: Input, deadline: float | None = None) -> ExecutionTrace:
    """Parse ``data`` and return the probes it hit.

    ``deadline`` is an absolute ``time.perf_counter()`` value; parsing past it
    ends the run as ``timed_out``. Wall time is left at zero for the caller to
    measure.
    """
    parser = _Parser(data, deadline)
    outcome = Outcome.COMPLETED
    try:
        parser.parse()
    except _Stop as stop:
        outcome = stop.outcome
    return ExecutionTrace(
        blocks=frozenset(parser.blocks), outcome=outcome, path_length=parser.path_length
    )
