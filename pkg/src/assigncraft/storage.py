"""On-disk record and file stores.

Records serialize as canonical JSON (sorted keys, UTF-8, compact) so
fixtures diff cleanly and equality means byte equality. Writes are atomic
per key: content lands in a temp file that is hard-linked into place, which
also makes duplicate detection race-free.
"""

from __future__ import annotations

import json
import os
import secrets
import tempfile
import threading
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Any, Iterable, Optional

from .domain import (
    Attempt,
    GenerationRecord,
    MediaKind,
    ServiceError,
    StorageFailure,
    TaskKind,
    format_timestamp,
    utc_now,
)

DEFAULT_MAX_FILE_BYTES = 10 * 1024 * 1024


class DuplicateKey(ServiceError):
    code = "duplicate_key"


class NotFound(ServiceError):
    code = "not_found"
    client_fault = True


class TooLarge(ServiceError):
    code = "payload_too_large"
    client_fault = True


def canonical_json(value: Any) -> str:
    return json.dumps(value, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def _atomic_write(path: Path, data: bytes, durable: bool, exclusive: bool) -> None:
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    tmp = Path(tmp_name)
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
            if durable:
                handle.flush()
                os.fsync(handle.fileno())
        if exclusive:
            os.link(tmp, path)  # fails atomically if the key exists
        else:
            os.replace(tmp, path)
            tmp = None  # replaced, nothing left to clean up
    finally:
        if tmp is not None:
            tmp.unlink(missing_ok=True)


@dataclass(frozen=True)
class RecordSummary:
    request_id: str
    task: TaskKind
    interest: str
    assignment_title: str
    model_name: str
    provider_id: str
    created_at: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "request_id": self.request_id,
            "task": self.task.value,
            "interest": self.interest,
            "assignment_title": self.assignment_title,
            "model_name": self.model_name,
            "provider_id": self.provider_id,
            "created_at": self.created_at,
        }


class RecordStore:
    """Generation records keyed by request_id, one canonical-JSON file each.

    A small in-memory index (request_id -> summary) keeps listing cheap;
    it is rebuilt from disk on startup so the files stay the source of
    truth.
    """

    def __init__(self, root: Path | str, durable: bool = True):
        self._records_dir = Path(root) / "records"
        self._attempts_dir = Path(root) / "attempts"
        self._records_dir.mkdir(parents=True, exist_ok=True)
        self._attempts_dir.mkdir(parents=True, exist_ok=True)
        self._durable = durable
        self._lock = threading.Lock()
        self._index: dict[str, RecordSummary] = {}
        self._load_index()

    def _load_index(self) -> None:
        for path in self._records_dir.glob("*.json"):
            try:
                record = GenerationRecord.from_dict(json.loads(path.read_text(encoding="utf-8")))
            except (ValueError, KeyError, ServiceError):
                continue  # ignore foreign or damaged files
            self._index[record.request_id] = _summarize(record)

    def put_record(self, record: GenerationRecord) -> str:
        """Persist one record durably; returns the request_id as the ack."""
        path = self._records_dir / f"{record.request_id}.json"
        payload = canonical_json(record.to_dict()).encode("utf-8")
        try:
            _atomic_write(path, payload, durable=self._durable, exclusive=True)
        except FileExistsError:
            raise DuplicateKey(f"record {record.request_id!r} already exists") from None
        except OSError as exc:
            raise StorageFailure(f"record write failed: {exc}") from exc
        with self._lock:
            self._index[record.request_id] = _summarize(record)
        return record.request_id

    def get_record(self, request_id: str) -> GenerationRecord:
        path = self._records_dir / f"{request_id}.json"
        if not _safe_key(request_id) or not path.is_file():
            raise NotFound(f"no record {request_id!r}")
        return GenerationRecord.from_dict(json.loads(path.read_text(encoding="utf-8")))

    def list_records(self, task: Optional[TaskKind] = None, limit: int = 50) -> list[RecordSummary]:
        """Newest first; created_at ties break on request_id so the order
        is total and stable."""
        if limit < 1:
            raise ValueError("limit must be at least 1")
        with self._lock:
            summaries = list(self._index.values())
        if task is not None:
            summaries = [s for s in summaries if s.task is task]
        summaries.sort(key=lambda s: s.request_id)  # tie-break, kept by stable sort
        summaries.sort(key=lambda s: s.created_at, reverse=True)
        return summaries[:limit]

    def count(self) -> int:
        with self._lock:
            return len(self._index)

    def put_attempt_log(self, request_id: str, attempts: Iterable[Attempt]) -> None:
        """Keep the provider attempt trail of a failed run for audit."""
        path = self._attempts_dir / f"{request_id}.json"
        payload = canonical_json([a.to_dict() for a in attempts]).encode("utf-8")
        _atomic_write(path, payload, durable=self._durable, exclusive=False)

    def get_attempt_log(self, request_id: str) -> list[dict[str, Any]]:
        path = self._attempts_dir / f"{request_id}.json"
        if not _safe_key(request_id) or not path.is_file():
            raise NotFound(f"no attempt log {request_id!r}")
        return json.loads(path.read_text(encoding="utf-8"))


def _summarize(record: GenerationRecord) -> RecordSummary:
    return RecordSummary(
        request_id=record.request_id,
        task=record.task,
        interest=record.interest,
        assignment_title=record.result.assignment_title,
        model_name=record.model_name,
        provider_id=record.provider_id,
        created_at=format_timestamp(record.created_at),
    )


def _safe_key(key: str) -> bool:
    return bool(key) and all(ch.isalnum() or ch in "-_" for ch in key)


@dataclass(frozen=True)
class StoredFile:
    file_id: str
    data: bytes
    media_kind: MediaKind
    size: int
    uploaded_at: str


class FileStore:
    """Uploaded assignment files: an opaque blob plus a metadata sidecar."""

    def __init__(self, root: Path | str, max_bytes: int = DEFAULT_MAX_FILE_BYTES, durable: bool = True):
        self._files_dir = Path(root) / "files"
        self._files_dir.mkdir(parents=True, exist_ok=True)
        self._max_bytes = max_bytes
        self._durable = durable

    @property
    def max_bytes(self) -> int:
        return self._max_bytes

    def put_file(self, data: bytes, media_kind: MediaKind) -> str:
        if len(data) > self._max_bytes:
            raise TooLarge(f"file exceeds the {self._max_bytes}-byte limit")
        file_id = secrets.token_hex(16)
        meta = {
            "media_kind": media_kind.value,
            "size": len(data),
            "uploaded_at": format_timestamp(utc_now()),
        }
        _atomic_write(self._files_dir / f"{file_id}.bin", data, durable=self._durable, exclusive=True)
        _atomic_write(
            self._files_dir / f"{file_id}.meta.json",
            canonical_json(meta).encode("utf-8"),
            durable=self._durable,
            exclusive=False,
        )
        return file_id

    def get_file(self, file_id: str) -> StoredFile:
        blob_path = self._files_dir / f"{file_id}.bin"
        meta_path = self._files_dir / f"{file_id}.meta.json"
        if not _safe_key(file_id) or not blob_path.is_file() or not meta_path.is_file():
            raise NotFound(f"no file {file_id!r}")
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        data = blob_path.read_bytes()
        return StoredFile(
            file_id=file_id,
            data=data,
            media_kind=MediaKind.from_string(meta["media_kind"]),
            size=meta["size"],
            uploaded_at=meta["uploaded_at"],
        )
