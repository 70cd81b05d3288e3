"""The bundled sample document, generated deterministically.

The document is a 101-object file in the mini-parser's grammar: catalog,
page tree, twenty pages with fonts, content streams (raw and Flate), hex
encoded images, annotations, an info dictionary, an indirect stream length
and one deeply nested array. It hits every probe of the parser except the
planted faults and a few alternative branches left for mutations to find:
non-zero generations, duplicate objects, leading-dot reals, octal escapes,
empty containers and unknown filters.
"""

import functools
import zlib

import numpy as np

SAMPLE_RNG_SEED = 20170321
PAGE_COUNT = 20
FLATE_PAGES = frozenset({2, 7, 11, 13, 17, 19})
TEXT_LINES_PER_PAGE = 100
IMAGE_BYTES = 1700
NEST_DEPTH = 16

_WORDS = (
    "parser object stream trailer xref catalog page font image filter length "
    "offset token window reward action state agent gradient network coverage "
    "block mutation seed generation quotient baseline policy epsilon"
).split()


def _text_content(rng: np.random.Generator, page: int) -> bytes:
    lines = [b"BT", b"/F1 11 Tf", b"14 TL", f"72 {740 - page} Td".encode()]
    for _ in range(TEXT_LINES_PER_PAGE):
        words = rng.choice(_WORDS, size=int(rng.integers(5, 9)))
        lines.append(b"(" + " ".join(words).encode() + b") Tj T*")
    lines += [b"ET", b"q 0.5 0 0 0.5 300 400 cm /Im1 Do Q"]
    return b"\n".join(lines) + b"\n"


def _hex_content(rng: np.random.Generator) -> bytes:
    pixels = rng.integers(0, 256, size=IMAGE_BYTES, dtype=np.uint8).tobytes().hex().upper()
    rows = [pixels[i : i + 64] for i in range(0, len(pixels), 64)]
    return ("\n".join(rows) + ">\n").encode()


def _stream(entries: str, content: bytes, length: str | None = None) -> bytes:
    length = length if length is not None else str(len(content))
    head = f"<< {entries} /Length {length} >>\nstream\n".encode()
    return head + content + b"\nendstream"


def _objects(rng: np.random.Generator) -> dict[int, bytes]:
    pages = list(range(3, 3 + PAGE_COUNT))
    contents = list(range(25, 25 + PAGE_COUNT))
    images = list(range(45, 45 + PAGE_COUNT))
    annots = list(range(68, 101))
    objects: dict[int, bytes] = {
        1: (
            b"<< /Type /Catalog /Pages 2 0 R /Lang (en-US) "
            b"/ViewerPreferences << /DisplayDocTitle true /FitWindow false >> "
            b"/Metadata 66 0 R >>"
        ),
        2: (
            "<< /Type /Pages /Kids ["
            + " ".join(f"{p} 0 R" for p in pages)
            + f"] /Count {PAGE_COUNT} /MediaBox [0 0 612 792] >>"
        ).encode(),
    }
    for index, page in enumerate(pages):
        page_annots = " ".join(f"{a} 0 R" for a in annots if (a - 68) % PAGE_COUNT == index)
        objects[page] = (
            f"<< /Type /Page /Parent 2 0 R /Resources << /Font << /F1 23 0 R /F2 24 0 R >> "
            f"/XObject << /Im1 {images[index]} 0 R >> /ProcSet [/PDF /Text /ImageB] >> "
            f"/Contents {contents[index]} 0 R /Annots [{page_annots}] /Rotate 0 "
            f"/UserUnit 1.0 >>"
        ).encode()
    objects[23] = (
        b"<< /Type /Font /Subtype /Type1 /BaseFont /Helvetica#2DBold "
        b"/Encoding /WinAnsiEncoding /FirstChar 32 /LastChar 126 >>"
    )
    objects[24] = (
        b"<< /Type /Font /Subtype /Type1 /BaseFont /Times-Roman "
        b"/FontBBox [-168 -218 1000 898] /ItalicAngle -0.5 >>"
    )
    for index, number in enumerate(contents):
        text = _text_content(rng, index)
        if index in FLATE_PAGES:
            objects[number] = _stream("/Filter /FlateDecode", zlib.compress(text, 9))
        else:
            objects[number] = _stream("", text)
    for number in images:
        objects[number] = _stream(
            "/Type /XObject /Subtype /Image /Width 50 /Height 30 /ColorSpace /DeviceGray "
            "/BitsPerComponent 8 /Filter /ASCIIHexDecode /Decode [0 1]",
            _hex_content(rng),
        )
    metadata = (
        b"<?xpacket begin='' id='W5M0MpCehiHzreSzNTczkc9d'?>\n"
        b"<x:xmpmeta xmlns:x='adobe:ns:meta/'><rdf:RDF/></x:xmpmeta>\n"
        b"<?xpacket end='w'?>"
    )
    objects[65] = str(len(metadata)).encode()
    objects[66] = _stream("/Type /Metadata /Subtype /XML", metadata, length="65 0 R")
    objects[67] = (
        b"<< /Title (Quarterly \\(draft\\) report) /Author (Fuzz (sample) generator) "
        b"/Subject <53616D706C65> /Producer (deepq-fuzzer) "
        b"/CreationDate (D:20170321120000Z) /Trapped false /Scale 1.5 /Offset -0.25 "
        b"/Marked true /Custom null >>"
    )
    for number in annots:
        x, y = (int(v) for v in rng.integers(36, 560, size=2))
        target = pages[(number - 68) % PAGE_COUNT]
        objects[number] = (
            f"<< /Type /Annot /Subtype /Link /Rect [{x} {y} {x + 120} {y + 14}] "
            f"/Border [0 0 1] /C [0.0 0.25 0.75] "
            f"/Dest [{target} 0 R /XYZ 0 792 null] /F 4 >>"
        ).encode()
    objects[101] = (
        b"<< /Nest " + b"[" * NEST_DEPTH + b" 1 " + b"]" * NEST_DEPTH + b" /Tag /Deep >>"
    )
    return objects


@functools.cache
def sample_document() -> bytes:
    """Return the bundled valid seed document."""
    rng = np.random.default_rng(SAMPLE_RNG_SEED)
    objects = _objects(rng)
    out = bytearray(b"%PDF-1.4\n%\xe2\xe3\xcf\xd3\n")
    offsets: dict[int, int] = {}
    for number in sorted(objects):
        if number == 25:
            out += b"% page content streams follow\n"
        offsets[number] = len(out)
        out += f"{number} 0 obj\n".encode() + objects[number] + b"\nendobj\n"
    xref_offset = len(out)
    size = max(objects) + 1
    out += f"xref\n0 {size}\n".encode()
    out += b"0000000000 65535 f \n"
    for number in range(1, size):
        out += f"{offsets[number]:010d} 00000 n \n".encode()
    out += (
        f"trailer\n<< /Size {size} /Root 1 0 R /Info 67 0 R "
        f"/ID [<8A3F21C0> <8A3F21C0>] >>\nstartxref\n{xref_offset}\n%%EOF\n"
    ).encode()
    return bytes(out)
