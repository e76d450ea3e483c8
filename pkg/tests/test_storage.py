from __future__ import annotations

import json
from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given, settings, strategies as st

from assigncraft.domain import (
    GeneratedAssignment,
    GenerationRecord,
    LengthReport,
    MediaKind,
    TaskKind,
)
from assigncraft.storage import (
    DuplicateKey,
    FileStore,
    NotFound,
    RecordStore,
    TooLarge,
    canonical_json,
)

BASE_TIME = datetime(2026, 3, 1, 12, 0, 0, tzinfo=timezone.utc)


def make_record(request_id="r1", task=TaskKind.PERSONALIZE, created_at=BASE_TIME, title="Title ✨"):
    return GenerationRecord(
        request_id=request_id,
        task=task,
        interest="astronomy",
        original_content="original text",
        result=GeneratedAssignment(title, "### Content\n\nBody $x$"),
        model_name="llama-3.3-70b",
        prompt_tokens=10,
        completion_tokens=20,
        response_time_ms=42,
        provider_id="groq",
        created_at=created_at,
        length_report=LengthReport(2, 3, 1.5, True),
    )


def test_put_then_get_round_trip(tmp_path):
    store = RecordStore(tmp_path)
    record = make_record()
    store.put_record(record)
    assert store.get_record("r1") == record


def test_duplicate_request_id_rejected(tmp_path):
    store = RecordStore(tmp_path)
    store.put_record(make_record())
    with pytest.raises(DuplicateKey):
        store.put_record(make_record())


def test_get_unknown_record(tmp_path):
    with pytest.raises(NotFound):
        RecordStore(tmp_path).get_record("missing")


def test_record_file_is_canonical_json(tmp_path):
    store = RecordStore(tmp_path)
    record = make_record()
    store.put_record(record)
    on_disk = (tmp_path / "records" / "r1.json").read_text(encoding="utf-8")
    assert on_disk == canonical_json(record.to_dict())
    assert json.loads(on_disk)["result"]["assignment_title"] == "Title ✨"


def test_list_recent_returns_newest_first(tmp_path):
    store = RecordStore(tmp_path, durable=False)
    for i in range(3):
        store.put_record(make_record(request_id=f"r{i}", created_at=BASE_TIME + timedelta(seconds=i)))
    summaries = store.list_records(limit=2)
    assert [s.request_id for s in summaries] == ["r2", "r1"]


def test_list_filters_by_task(tmp_path):
    store = RecordStore(tmp_path, durable=False)
    store.put_record(make_record(request_id="p1", task=TaskKind.PERSONALIZE))
    store.put_record(make_record(request_id="s1", task=TaskKind.SIMPLIFY))
    store.put_record(make_record(request_id="s2", task=TaskKind.SIMPLIFY))
    summaries = store.list_records(task=TaskKind.SIMPLIFY)
    assert {s.request_id for s in summaries} == {"s1", "s2"}


def test_list_empty_store(tmp_path):
    assert RecordStore(tmp_path).list_records() == []


def test_list_limit_one_gives_single_newest(tmp_path):
    store = RecordStore(tmp_path, durable=False)
    store.put_record(make_record(request_id="old", created_at=BASE_TIME))
    store.put_record(make_record(request_id="new", created_at=BASE_TIME + timedelta(minutes=1)))
    assert [s.request_id for s in store.list_records(limit=1)] == ["new"]


def test_list_ties_break_on_request_id(tmp_path):
    store = RecordStore(tmp_path, durable=False)
    for request_id in ["bbb", "aaa", "ccc"]:
        store.put_record(make_record(request_id=request_id, created_at=BASE_TIME))
    assert [s.request_id for s in store.list_records()] == ["aaa", "bbb", "ccc"]


def test_summaries_omit_full_content(tmp_path):
    store = RecordStore(tmp_path, durable=False)
    store.put_record(make_record())
    row = store.list_records()[0].to_dict()
    assert "original_content" not in row
    assert "assignment_content" not in str(row)
    assert row["assignment_title"] == "Title ✨"


def test_index_rebuilds_from_disk(tmp_path):
    RecordStore(tmp_path, durable=False).put_record(make_record())
    reopened = RecordStore(tmp_path, durable=False)
    assert reopened.count() == 1
    assert reopened.list_records()[0].request_id == "r1"


def test_attempt_log_round_trip(tmp_path):
    from assigncraft.domain import Attempt

    store = RecordStore(tmp_path, durable=False)
    store.put_attempt_log("r9", [Attempt("A", "timeout", "slow", 1200)])
    log = store.get_attempt_log("r9")
    assert log == [{"provider_id": "A", "outcome": "timeout", "detail": "slow", "latency_ms": 1200}]


# --- property: random records survive the round trip --------------------------

safe_text = st.text(
    alphabet=st.characters(blacklist_categories=("Cs",), blacklist_characters="`"),
    min_size=1,
    max_size=40,
).filter(lambda s: s.strip() and "\\" not in s)


@settings(max_examples=60)
@given(
    request_id=st.uuids().map(lambda u: u.hex),
    interest=safe_text,
    title=safe_text,
    content=safe_text,
    prompt_tokens=st.integers(min_value=0, max_value=10**6),
    completion_tokens=st.integers(min_value=0, max_value=10**6),
    response_time_ms=st.integers(min_value=1, max_value=10**7),
    micros=st.integers(min_value=0, max_value=999_999),
)
def test_property_round_trip_canonical_equality(
    tmp_path_factory,
    request_id,
    interest,
    title,
    content,
    prompt_tokens,
    completion_tokens,
    response_time_ms,
    micros,
):
    root = tmp_path_factory.mktemp("prop")
    store = RecordStore(root, durable=False)
    record = GenerationRecord(
        request_id=request_id,
        task=TaskKind.SIMPLIFY,
        interest=interest,
        original_content=content,
        result=GeneratedAssignment(title, content),
        model_name="m",
        prompt_tokens=prompt_tokens,
        completion_tokens=completion_tokens,
        response_time_ms=response_time_ms,
        provider_id="p",
        created_at=BASE_TIME.replace(microsecond=micros),
        length_report=LengthReport(1, 1, 1.0, True),
    )
    store.put_record(record)
    fetched = store.get_record(request_id)
    assert canonical_json(fetched.to_dict()) == canonical_json(record.to_dict())


# --- file store ----------------------------------------------------------------


def test_file_round_trip(tmp_path):
    store = FileStore(tmp_path)
    file_id = store.put_file(b"abc", MediaKind.PLAIN_TEXT)
    stored = store.get_file(file_id)
    assert stored.data == b"abc"
    assert stored.media_kind is MediaKind.PLAIN_TEXT
    assert stored.size == 3


def test_file_unknown_id(tmp_path):
    with pytest.raises(NotFound):
        FileStore(tmp_path).get_file("nope")


def test_file_too_large_boundary(tmp_path):
    store = FileStore(tmp_path, max_bytes=8)
    assert store.put_file(b"x" * 8, MediaKind.PLAIN_TEXT)
    with pytest.raises(TooLarge):
        store.put_file(b"x" * 9, MediaKind.PLAIN_TEXT)


def test_file_ids_are_opaque_and_unique(tmp_path):
    store = FileStore(tmp_path)
    ids = {store.put_file(b"same", MediaKind.PDF) for _ in range(5)}
    assert len(ids) == 5


def test_file_store_rejects_path_traversal_keys(tmp_path):
    with pytest.raises(NotFound):
        FileStore(tmp_path).get_file("../records/r1")
