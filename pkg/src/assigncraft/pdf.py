"""Minimal PDF text-layer extraction.

Reads per-page text from PDFs whose content streams are stored plain or
behind the common Flate/ASCII85/ASCIIHex filters, which covers documents
produced by mainstream generators. Image-only pages yield empty strings;
there is deliberately no OCR here. Scanned documents therefore surface as
"no text layer" upstream.
"""

from __future__ import annotations

import base64
import re
import zlib
from typing import Any, Optional

__all__ = ["PdfError", "extract_page_texts"]


class PdfError(Exception):
    """The bytes are not a PDF this extractor can read."""


_OBJ_HEADER = re.compile(rb"(\d+)\s+(\d+)\s+obj\b")
_ROOT_REF = re.compile(rb"/Root\s+(\d+)\s+\d+\s+R")
_WHITESPACE = b"\x00\t\n\x0c\r "
_DELIMITERS = b"()<>[]{}/%"


class _Ref:
    __slots__ = ("num",)

    def __init__(self, num: int):
        self.num = num


def _skip_ws(data: bytes, i: int) -> int:
    n = len(data)
    while i < n:
        byte = data[i]
        if byte in _WHITESPACE:
            i += 1
        elif byte == 0x25:  # %-comment runs to end of line
            while i < n and data[i] not in b"\r\n":
                i += 1
        else:
            break
    return i


def _parse_object(data: bytes, i: int) -> tuple[Any, int]:
    i = _skip_ws(data, i)
    if i >= len(data):
        raise PdfError("unexpected end of data")
    ch = data[i:i + 1]
    if data.startswith(b"<<", i):
        return _parse_dict(data, i)
    if ch == b"[":
        return _parse_array(data, i)
    if ch == b"/":
        return _parse_name(data, i)
    if ch == b"(":
        return _parse_literal_string(data, i)
    if ch == b"<":
        return _parse_hex_string(data, i)
    if data.startswith(b"true", i):
        return True, i + 4
    if data.startswith(b"false", i):
        return False, i + 5
    if data.startswith(b"null", i):
        return None, i + 4
    return _parse_number_or_ref(data, i)


def _parse_dict(data: bytes, i: int) -> tuple[dict, int]:
    i += 2  # <<
    result: dict[str, Any] = {}
    while True:
        i = _skip_ws(data, i)
        if data.startswith(b">>", i):
            return result, i + 2
        if data[i:i + 1] != b"/":
            raise PdfError("malformed dictionary key")
        key, i = _parse_name(data, i)
        value, i = _parse_object(data, i)
        result[key] = value


def _parse_array(data: bytes, i: int) -> tuple[list, int]:
    i += 1  # [
    items: list[Any] = []
    while True:
        i = _skip_ws(data, i)
        if data[i:i + 1] == b"]":
            return items, i + 1
        value, i = _parse_object(data, i)
        items.append(value)


def _parse_name(data: bytes, i: int) -> tuple[str, int]:
    i += 1  # /
    start = i
    n = len(data)
    while i < n and data[i] not in _WHITESPACE and data[i] not in _DELIMITERS:
        i += 1
    return data[start:i].decode("latin-1"), i


_ESCAPES = {
    b"n": b"\n", b"r": b"\r", b"t": b"\t", b"b": b"\b", b"f": b"\x0c",
    b"(": b"(", b")": b")", b"\\": b"\\",
}


def _parse_literal_string(data: bytes, i: int) -> tuple[bytes, int]:
    i += 1  # (
    out = bytearray()
    depth = 1
    n = len(data)
    while i < n:
        ch = data[i:i + 1]
        if ch == b"\\":
            nxt = data[i + 1:i + 2]
            if nxt in _ESCAPES:
                out += _ESCAPES[nxt]
                i += 2
            elif nxt.isdigit():
                j = i + 1
                while j < min(i + 4, n) and data[j:j + 1].isdigit():
                    j += 1
                out.append(int(data[i + 1:j], 8) & 0xFF)
                i = j
            elif nxt in (b"\n", b"\r"):
                i += 2  # line continuation
                if nxt == b"\r" and data[i:i + 1] == b"\n":
                    i += 1
            else:
                i += 1
        elif ch == b"(":
            depth += 1
            out += ch
            i += 1
        elif ch == b")":
            depth -= 1
            if depth == 0:
                return bytes(out), i + 1
            out += ch
            i += 1
        else:
            out += ch
            i += 1
    raise PdfError("unterminated string literal")


def _parse_hex_string(data: bytes, i: int) -> tuple[bytes, int]:
    end = data.find(b">", i)
    if end < 0:
        raise PdfError("unterminated hex string")
    digits = re.sub(rb"\s", b"", data[i + 1:end])
    if len(digits) % 2:
        digits += b"0"
    return bytes.fromhex(digits.decode("ascii")), end + 1


_NUMBER = re.compile(rb"[+-]?(?:\d+\.?\d*|\.\d+)")
_REF_AHEAD = re.compile(rb"\s+(\d+)\s+R\b")


def _parse_number_or_ref(data: bytes, i: int) -> tuple[Any, int]:
    match = _NUMBER.match(data, i)
    if not match:
        raise PdfError(f"unparseable token at offset {i}")
    token = match.group(0)
    end = match.end()
    if b"." not in token:
        ahead = _REF_AHEAD.match(data, end)
        if ahead:
            return _Ref(int(token)), ahead.end()
        return int(token), end
    return float(token), end


class _Document:
    def __init__(self, data: bytes):
        if not data.startswith(b"%PDF"):
            raise PdfError("not a PDF file")
        self._data = data
        self._objects: dict[int, tuple[Any, Optional[bytes]]] = {}
        self._scan_objects()

    def _scan_objects(self) -> None:
        data = self._data
        for match in _OBJ_HEADER.finditer(data):
            num = int(match.group(1))
            try:
                value, end = _parse_object(data, match.end())
            except PdfError:
                continue
            stream: Optional[bytes] = None
            if isinstance(value, dict):
                after = _skip_ws(data, end)
                if data.startswith(b"stream", after):
                    start = after + len(b"stream")
                    if data.startswith(b"\r\n", start):
                        start += 2
                    elif data.startswith(b"\n", start):
                        start += 1
                    length = self._maybe_resolve_length(value.get("Length"), data)
                    if length is None:
                        stop = data.find(b"endstream", start)
                        if stop < 0:
                            continue
                        stream = data[start:stop].rstrip(b"\r\n")
                    else:
                        stream = data[start:start + length]
            self._objects[num] = (value, stream)

    def _maybe_resolve_length(self, length: Any, data: bytes) -> Optional[int]:
        if isinstance(length, int):
            return length
        if isinstance(length, _Ref):
            # Indirect length objects appear after their stream; pull the
            # integer straight from a second regex pass.
            match = re.search(rb"(?<![\d])%d\s+\d+\s+obj\s+(\d+)" % length.num, data)
            if match:
                return int(match.group(1))
        return None

    def resolve(self, value: Any) -> Any:
        seen = set()
        while isinstance(value, _Ref):
            if value.num in seen:
                raise PdfError("circular object reference")
            seen.add(value.num)
            entry = self._objects.get(value.num)
            if entry is None:
                return None
            value = entry[0]
        return value

    def stream_for(self, ref: Any) -> Optional[bytes]:
        if not isinstance(ref, _Ref):
            return None
        entry = self._objects.get(ref.num)
        if entry is None:
            return None
        value, stream = entry
        if stream is None:
            return None
        return _decode_stream(self.resolve(value), stream)

    def pages(self) -> list[dict]:
        root_ref = None
        for match in _ROOT_REF.finditer(self._data):
            root_ref = _Ref(int(match.group(1)))
        catalog = self.resolve(root_ref) if root_ref else None
        if not isinstance(catalog, dict):
            # Fall back to any object that declares itself the catalog.
            for value, _stream in self._objects.values():
                if isinstance(value, dict) and value.get("Type") == "Catalog":
                    catalog = value
                    break
        if not isinstance(catalog, dict):
            raise PdfError("no document catalog found")
        if "Encrypt" in catalog:
            raise PdfError("encrypted PDFs are not supported")
        pages_node = self.resolve(catalog.get("Pages"))
        result: list[dict] = []
        self._walk_pages(pages_node, result, depth=0)
        return result

    def _walk_pages(self, node: Any, out: list[dict], depth: int) -> None:
        if depth > 64 or not isinstance(node, dict):
            return
        node_type = node.get("Type")
        if node_type == "Page":
            out.append(node)
            return
        kids = self.resolve(node.get("Kids")) or []
        for kid in kids:
            self._walk_pages(self.resolve(kid), out, depth + 1)

    def page_content(self, page: dict) -> bytes:
        contents = page.get("Contents")
        refs = contents if isinstance(contents, list) else [contents]
        chunks = []
        for ref in refs:
            stream = self.stream_for(ref)
            if stream:
                chunks.append(stream)
        return b"\n".join(chunks)


def _decode_stream(info: dict, raw: bytes) -> Optional[bytes]:
    filters = info.get("Filter")
    if filters is None:
        filters = []
    elif not isinstance(filters, list):
        filters = [filters]
    data = raw
    for name in filters:
        if name == "FlateDecode":
            try:
                data = zlib.decompress(data)
            except zlib.error:
                return None
        elif name == "ASCII85Decode":
            text = re.sub(rb"\s", b"", data)
            if text.startswith(b"<~"):
                text = text[2:]
            if text.endswith(b"~>"):
                text = text[:-2]
            try:
                data = base64.a85decode(text)
            except ValueError:
                return None
        elif name == "ASCIIHexDecode":
            text = re.sub(rb"\s", b"", data).rstrip(b">")
            if len(text) % 2:
                text += b"0"
            try:
                data = bytes.fromhex(text.decode("ascii"))
            except ValueError:
                return None
        else:
            return None  # unsupported filter (DCT images etc.): no text
    return data


_OPERATOR = re.compile(rb"""[A-Za-z'"*][A-Za-z0-9'"*]{0,7}""")


def _decode_pdf_text(raw: bytes) -> str:
    try:
        return raw.decode("cp1252")
    except UnicodeDecodeError:
        return raw.decode("latin-1", errors="replace")


def _extract_text(content: bytes) -> str:
    """Pull show-text operator arguments out of one page's content stream.

    Text runs inside a BT..ET block concatenate; T*, ', and " start new
    lines; separate blocks separate lines. Positioning-based layout is out
    of scope, so columnar PDFs come back in stream order.
    """
    lines: list[str] = []
    current = ""
    pending: list[bytes] = []  # string operands awaiting their operator
    in_array = False
    array_parts: list[bytes] = []

    def flush_line():
        nonlocal current
        if current.strip():
            lines.append(current)
        current = ""

    def show(parts: list[bytes]):
        nonlocal current
        current += _decode_pdf_text(b"".join(parts))

    i = 0
    n = len(content)
    while i < n:
        byte = content[i]
        if byte in _WHITESPACE:
            i += 1
            continue
        ch = content[i:i + 1]
        if ch == b"(":
            try:
                value, i = _parse_literal_string(content, i)
            except PdfError:
                break
            (array_parts if in_array else pending).append(value)
        elif ch == b"<" and not content.startswith(b"<<", i):
            try:
                value, i = _parse_hex_string(content, i)
            except PdfError:
                break
            (array_parts if in_array else pending).append(value)
        elif content.startswith(b"<<", i):
            try:
                _, i = _parse_dict(content, i)
            except PdfError:
                i += 2
        elif ch == b"[":
            in_array = True
            array_parts = []
            i += 1
        elif ch == b"]":
            in_array = False
            pending.append(b"".join(array_parts))
            i += 1
        else:
            match = _OPERATOR.match(content, i)
            if not match:
                i += 1
                continue
            op = match.group(0)
            i = match.end()
            if op in (b"Tj", b"TJ"):
                show(pending)
                pending = []
            elif op in (b"'", b'"'):
                flush_line()
                show(pending)
                pending = []
            elif op == b"T*":
                flush_line()
            elif op in (b"BT", b"ET"):
                flush_line()
                pending = []
            else:
                # any other operator consumes its operands
                pending = []
    flush_line()
    return "\n".join(lines)


def extract_page_texts(data: bytes) -> list[str]:
    """Per-page extracted text, in page order. Pages without a text layer
    come back as empty strings; an empty list means a page-less document."""
    document = _Document(data)
    texts = []
    for page in document.pages():
        content = document.page_content(page)
        texts.append(_extract_text(content) if content else "")
    return texts
