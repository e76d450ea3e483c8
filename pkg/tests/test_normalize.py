from __future__ import annotations

import json
import re

import pytest
from hypothesis import given, settings, strategies as st

from assigncraft.domain import GeneratedAssignment, MalformedModelOutput
from assigncraft.normalize import (
    REPAIR_DROPPED_EXTRA_FIELDS,
    REPAIR_FENCED_JSON,
    check_length,
    extract_json,
    normalize_content,
    parse_assignment,
)

# --- extract_json ------------------------------------------------------------

BARE = '{"decision":"accepted","explanation":""}'
FENCED = 'Sure! ```json\n{"assignment_title":"T","assignment_content":"C"}\n```'
PROSE = 'Let me think. The answer is {"decision":"rejected","explanation":"not an interest"} as requested.'


def test_extract_bare_decision():
    result = extract_json(BARE)
    assert result.payload == {"decision": "accepted", "explanation": ""}
    assert result.repairs_applied == []


def test_extract_fenced_payload():
    # oracle: strip the fence by hand and parse with the stdlib
    expected = json.loads('{"assignment_title":"T","assignment_content":"C"}')
    result = extract_json(FENCED)
    assert result.payload == expected
    assert result.repairs_applied == [REPAIR_FENCED_JSON]


def test_extract_prose_wrapped():
    result = extract_json(PROSE)
    assert result.payload["decision"] == "rejected"
    assert result.repairs_applied == []


def test_extract_no_json_raises():
    with pytest.raises(MalformedModelOutput):
        extract_json("no json here")


def test_extract_bare_word_raises_with_excerpt():
    with pytest.raises(MalformedModelOutput) as info:
        extract_json("ACCEPTED" * 100)
    assert len(info.value.raw_excerpt) <= 200


def test_extract_span_is_byte_offsets_into_source():
    raw = 'préfix 🎓 {"a": "ü"} suffix'
    result = extract_json(raw)
    start, end = result.raw_span
    segment = raw.encode("utf-8")[start:end].decode("utf-8")
    assert json.loads(segment) == result.payload


def test_extract_skips_unparseable_brace_groups():
    raw = 'set {x, y} then {"decision": "accepted", "explanation": ""}'
    assert extract_json(raw).payload["decision"] == "accepted"


def test_extract_braces_inside_strings_do_not_break_balance():
    raw = '{"explanation": "use { and } freely", "decision": "rejected"}'
    assert extract_json(raw).payload["decision"] == "rejected"


def test_extract_nested_objects():
    raw = 'noise {"a": {"b": {"c": 1}}} trailing'
    assert extract_json(raw).payload == {"a": {"b": {"c": 1}}}


# --- normalize_content -------------------------------------------------------


def test_backticks_become_dollars():
    assert normalize_content("compute `x+1` now") == "compute $x+1$ now"


def test_double_backslash_command_collapses():
    assert normalize_content("\\\\sigma") == "\\sigma"


def test_math_row_break_is_preserved():
    assert normalize_content("$$a \\\\ b$$") == "$$a \\\\ b$$"


def test_row_break_before_newline_preserved():
    assert normalize_content("$$m \\\\\nn$$") == "$$m \\\\\nn$$"


def test_row_break_before_ampersand_preserved():
    assert normalize_content("x \\\\& y") == "x \\\\& y"


def test_quadruple_backslash_before_letter_collapses():
    assert normalize_content("\\\\\\\\alpha") == "\\alpha"


def test_single_backslash_command_untouched():
    assert normalize_content("$\\sigma + \\mu$") == "$\\sigma + \\mu$"


def test_escaped_brace_untouched():
    assert normalize_content("\\{ k \\in S \\}") == "\\{ k \\in S \\}"


def test_trailing_backslashes_untouched():
    assert normalize_content("line \\\\") == "line \\\\"


NORMALIZE_ALPHABET = "ab Z9`\\$&\n{}._-*#"


@settings(max_examples=400)
@given(st.text(alphabet=NORMALIZE_ALPHABET, max_size=60))
def test_normalize_idempotent(text):
    once = normalize_content(text)
    assert normalize_content(once) == once


@settings(max_examples=400)
@given(st.text(alphabet=NORMALIZE_ALPHABET, max_size=60))
def test_normalize_output_clean(text):
    out = normalize_content(text)
    assert "`" not in out
    assert not re.search(r"\\\\+[A-Za-z]", out)


# --- parse_assignment --------------------------------------------------------

EXAMPLE_TITLE = "Astronomy Alignment: Finding Cosmic Pairs \U0001F680 \U0001F47D"


def test_parse_assignment_example_payload():
    payload = {"assignment_title": EXAMPLE_TITLE, "assignment_content": "### The Challenge\n\nAlign `nums`."}
    result = parse_assignment(payload)
    assert result.assignment_title == EXAMPLE_TITLE
    assert result.assignment_content == "### The Challenge\n\nAlign $nums$."


def test_parse_assignment_missing_content():
    with pytest.raises(MalformedModelOutput, match="assignment_content"):
        parse_assignment({"assignment_title": "T"})


def test_parse_assignment_non_string_field():
    with pytest.raises(MalformedModelOutput, match="assignment_title"):
        parse_assignment({"assignment_title": 3, "assignment_content": "C"})


def test_parse_assignment_drops_extra_fields():
    repairs: list[str] = []
    result = parse_assignment(
        {"assignment_title": "T", "assignment_content": "C", "notes": "ignore me"}, repairs
    )
    assert result == GeneratedAssignment("T", "C")
    assert repairs == [REPAIR_DROPPED_EXTRA_FIELDS]


# --- check_length ------------------------------------------------------------


def test_length_boundary_exactly_one_point_five():
    report = check_length("w " * 100, "g " * 150)
    assert report.original_words == 100
    assert report.generated_words == 150
    assert report.ratio == 1.5
    assert report.within_bound is True


def test_length_over_bound_flags():
    report = check_length("w " * 100, "g " * 160)
    assert report.ratio == 1.6
    assert report.within_bound is False


def test_length_empty_original_is_within_by_convention():
    report = check_length("   ", "some generated words")
    assert report.original_words == 0
    assert report.ratio is None
    assert report.within_bound is True


def test_length_unicode_whitespace_split():
    report = check_length("a b c", "x y")
    assert report.original_words == 3
    assert report.generated_words == 2
