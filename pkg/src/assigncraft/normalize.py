"""Extraction and normalization of raw model output.

Models are instructed to answer with a bare JSON object, Markdown content,
dollar-sign math delimiters, and single-backslash LaTeX commands. They
frequently don't. This module recovers the JSON payload from noisy text and
enforces the formatting contract afterwards; every function here is pure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Optional

from .domain import GeneratedAssignment, LengthReport, MalformedModelOutput

REPAIR_FENCED_JSON = "fenced_json"
REPAIR_DROPPED_EXTRA_FIELDS = "dropped_extra_fields"

LENGTH_RATIO_BOUND = 1.5


@dataclass
class ExtractionResult:
    """A parsed JSON object plus where it came from and what was repaired."""

    payload: dict[str, Any]
    raw_span: tuple[int, int]  # byte offsets into the UTF-8 encoding of the source
    repairs_applied: list[str] = field(default_factory=list)


def _balanced_regions(raw: str):
    """Yield (start, end) character spans of top-level ``{...}`` regions,
    scanning left to right and skipping brace characters inside JSON string
    literals."""
    depth = 0
    start = -1
    in_string = False
    escaped = False
    for i, ch in enumerate(raw):
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"' and depth > 0:
            in_string = True
        elif ch == "{":
            if depth == 0:
                start = i
            depth += 1
        elif ch == "}" and depth > 0:
            depth -= 1
            if depth == 0:
                yield start, i + 1
                in_string = False


def _char_span_to_bytes(raw: str, start: int, end: int) -> tuple[int, int]:
    head = len(raw[:start].encode("utf-8"))
    return head, head + len(raw[start:end].encode("utf-8"))


def _is_fenced(raw: str, start: int, end: int) -> bool:
    return "```" in raw[:start] and "```" in raw[end:]


def extract_json(raw: str) -> ExtractionResult:
    """Locate and parse the first top-level JSON object in ``raw``.

    Surrounding prose and Markdown code fences are ignored; a fence around
    the object is recorded as the ``fenced_json`` repair. Raises
    MalformedModelOutput when no region parses.
    """
    for start, end in _balanced_regions(raw):
        candidate = raw[start:end]
        try:
            payload = json.loads(candidate)
        except json.JSONDecodeError:
            continue
        if not isinstance(payload, dict):
            continue
        repairs = [REPAIR_FENCED_JSON] if _is_fenced(raw, start, end) else []
        return ExtractionResult(
            payload=payload,
            raw_span=_char_span_to_bytes(raw, start, end),
            repairs_applied=repairs,
        )
    raise MalformedModelOutput("no JSON object found in model output", raw=raw)


def _replace_backticks(text: str) -> str:
    return text.replace("`", "$")


def _collapse_backslash_runs(text: str) -> str:
    # A run of backslashes directly before an ASCII letter collapses to a
    # single backslash; runs before anything else (row breaks "\\" at
    # end-of-line or before "&", escaped braces, trailing runs) are kept.
    out: list[str] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch != "\\":
            out.append(ch)
            i += 1
            continue
        j = i
        while j < n and text[j] == "\\":
            j += 1
        follower = text[j] if j < n else ""
        if follower.isascii() and follower.isalpha():
            out.append("\\")
        else:
            out.append("\\" * (j - i))
        i = j
    return "".join(out)


def normalize_content(content: str) -> str:
    """Enforce the output formatting contract on generated Markdown.

    Backticks become dollar signs, and backslash runs before LaTeX command
    letters collapse to a single backslash (``\\\\sigma`` -> ``\\sigma``)
    while math row breaks are left alone. Idempotent by construction: the
    first pass leaves no backtick and no multi-backslash run before a
    letter for a second pass to touch.
    """
    return _collapse_backslash_runs(_replace_backticks(content))


ASSIGNMENT_FIELDS = ("assignment_title", "assignment_content")


def parse_assignment(payload: dict[str, Any], repairs: Optional[list[str]] = None) -> GeneratedAssignment:
    """Validate the two-field assignment payload and normalize its content.

    Extra fields are tolerated but dropped (recorded in ``repairs`` when a
    list is supplied); a missing or non-string field is a contract
    violation.
    """
    for name in ASSIGNMENT_FIELDS:
        value = payload.get(name)
        if not isinstance(value, str) or not value.strip():
            raise MalformedModelOutput(
                f"model output is missing field {name!r}", raw=json.dumps(payload)[:200]
            )
    extra = set(payload) - set(ASSIGNMENT_FIELDS)
    if extra and repairs is not None:
        repairs.append(REPAIR_DROPPED_EXTRA_FIELDS)
    return GeneratedAssignment(
        assignment_title=payload["assignment_title"],
        assignment_content=normalize_content(payload["assignment_content"]),
    )


def check_length(original: str, generated: str) -> LengthReport:
    """Compare word counts (Unicode-whitespace split) against the 1.5x bound.

    A violation never aborts the pipeline; the report is stored on the
    record for audit.
    """
    original_words = len(original.split())
    generated_words = len(generated.split())
    if original_words == 0:
        return LengthReport(
            original_words=0,
            generated_words=generated_words,
            ratio=None,
            within_bound=True,
        )
    ratio = generated_words / original_words
    return LengthReport(
        original_words=original_words,
        generated_words=generated_words,
        ratio=ratio,
        within_bound=ratio <= LENGTH_RATIO_BOUND,
    )
