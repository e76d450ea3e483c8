"""Core domain types shared by every part of the service.

Everything here is an immutable value object or an exception type; nothing
holds references to live services, so instances can move freely between
threads.
"""

from __future__ import annotations

import re
import secrets
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Callable, Mapping, Optional, Union


def new_request_id() -> str:
    """128-bit random identifier, hex-encoded."""
    return secrets.token_hex(16)


def utc_now() -> datetime:
    return datetime.now(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    """Fixed-width UTC ISO form so timestamps order lexicographically."""
    return ts.astimezone(timezone.utc).isoformat(timespec="microseconds")


def parse_timestamp(raw: str) -> datetime:
    return datetime.fromisoformat(raw)


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------


class ServiceError(Exception):
    """Base for every error the service surfaces deliberately.

    ``code`` is the stable machine-readable identifier; ``client_fault``
    separates the 400 class from the 5xx class.
    """

    code = "internal_error"
    client_fault = False

    def __init__(self, message: str, *, explanation: str | None = None):
        super().__init__(message)
        self.message = message
        self.explanation = explanation


class InvalidRequest(ServiceError):
    """Malformed inbound payload (unknown task, bad source combination)."""

    code = "invalid_request"
    client_fault = True


class PipelineError(ServiceError):
    """Base for failures raised while a request moves through the pipeline."""


class InvalidInterest(PipelineError):
    code = "invalid_interest"
    client_fault = True

    def __init__(self, explanation: str):
        super().__init__(f"interest rejected: {explanation}", explanation=explanation)


class InvalidAssignment(PipelineError):
    code = "invalid_assignment"
    client_fault = True

    def __init__(self, explanation: str):
        super().__init__(f"assignment rejected: {explanation}", explanation=explanation)


class UnsafeOutput(PipelineError):
    code = "unsafe_output"

    def __init__(self, explanation: str):
        super().__init__(f"generated content rejected: {explanation}", explanation=explanation)


@dataclass(frozen=True)
class Attempt:
    """One provider try, as it appears in an attempt log."""

    provider_id: str
    outcome: str  # "ok", a failure kind, or "skipped"
    detail: str = ""
    latency_ms: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "provider_id": self.provider_id,
            "outcome": self.outcome,
            "detail": self.detail,
            "latency_ms": self.latency_ms,
        }


class AllProvidersFailed(PipelineError):
    code = "all_providers_failed"

    def __init__(self, attempts: tuple[Attempt, ...]):
        self.attempts = tuple(attempts)
        summary = ", ".join(f"{a.provider_id}:{a.outcome}" for a in self.attempts) or "no eligible provider"
        super().__init__(f"every provider failed ({summary})")


class MalformedModelOutput(PipelineError):
    code = "malformed_model_output"

    def __init__(self, message: str, raw: str = ""):
        self.raw_excerpt = raw[:200]
        super().__init__(message)


class StorageFailure(PipelineError):
    code = "storage_failure"

    def __init__(self, detail: str):
        super().__init__(f"storage failure: {detail}")


class DeadlineExceeded(ServiceError):
    code = "deadline_exceeded"

    def __init__(self, message: str = "request deadline exceeded", *, attempts: int = 0):
        super().__init__(message)
        self.attempts = attempts


class Deadline:
    """Cooperative per-request deadline, checked between pipeline stages.

    Also counts provider attempts seen under it so a timeout response can
    report how far the request got.
    """

    def __init__(self, budget_ms: int, clock: Callable[[], float] = time.monotonic):
        self._clock = clock
        self._expires_at = clock() + budget_ms / 1000.0
        self.attempts_observed = 0

    def note_attempt(self) -> None:
        self.attempts_observed += 1

    def remaining_s(self) -> float:
        return self._expires_at - self._clock()

    def expired(self) -> bool:
        return self.remaining_s() <= 0

    def check(self) -> None:
        if self.expired():
            raise DeadlineExceeded(attempts=self.attempts_observed)


# ---------------------------------------------------------------------------
# Request-side types
# ---------------------------------------------------------------------------


class TaskKind(Enum):
    PERSONALIZE = "personalize"
    SIMPLIFY = "simplify"

    @classmethod
    def from_string(cls, raw: str) -> "TaskKind":
        for kind in cls:
            if raw == kind.value:
                return kind
        allowed = ", ".join(repr(k.value) for k in cls)
        raise InvalidRequest(f"unknown task {raw!r}: allowed values are {allowed}")


class MediaKind(Enum):
    PDF = "pdf"
    PLAIN_TEXT = "plain_text"

    @classmethod
    def from_string(cls, raw: str) -> "MediaKind":
        for kind in cls:
            if raw == kind.value:
                return kind
        allowed = ", ".join(repr(k.value) for k in cls)
        raise InvalidRequest(f"unknown media kind {raw!r}: allowed values are {allowed}")


@dataclass(frozen=True)
class TextSource:
    """Assignment submitted inline as text."""

    content: str

    def __post_init__(self):
        if not isinstance(self.content, str) or not self.content.strip():
            raise InvalidAssignment("assignment text is empty")


@dataclass(frozen=True)
class DocumentSource:
    """Assignment submitted earlier as a file; media kind is resolved from
    the file store when absent."""

    file_id: str
    media_kind: Optional[MediaKind] = None

    def __post_init__(self):
        if not isinstance(self.file_id, str) or not self.file_id.strip():
            raise InvalidRequest("file_id must be a non-empty string")


AssignmentSource = Union[TextSource, DocumentSource]

MAX_INTEREST_CHARS = 200


@dataclass(frozen=True)
class PersonalizationRequest:
    """One inbound job, fully typed and validated at the boundary."""

    request_id: str
    task: TaskKind
    source: AssignmentSource
    interest: str
    submitted_at: datetime

    def __post_init__(self):
        if not isinstance(self.interest, str) or len(self.interest) < 1:
            raise InvalidInterest("interest is required")
        if len(self.interest) > MAX_INTEREST_CHARS:
            raise InvalidInterest(f"interest must be at most {MAX_INTEREST_CHARS} characters")

    @classmethod
    def new(cls, task: TaskKind, source: AssignmentSource, interest: str) -> "PersonalizationRequest":
        return cls(
            request_id=new_request_id(),
            task=task,
            source=source,
            interest=interest,
            submitted_at=utc_now(),
        )


# ---------------------------------------------------------------------------
# Result-side types
# ---------------------------------------------------------------------------

_DOUBLE_BACKSLASH_BEFORE_LETTER = re.compile(r"\\\\+[A-Za-z]")


@dataclass(frozen=True)
class GeneratedAssignment:
    """Normalized model output: a title plus Markdown-with-LaTeX content."""

    assignment_title: str
    assignment_content: str

    def __post_init__(self):
        if not isinstance(self.assignment_title, str) or not self.assignment_title.strip():
            raise MalformedModelOutput("assignment_title is empty")
        if not isinstance(self.assignment_content, str) or not self.assignment_content.strip():
            raise MalformedModelOutput("assignment_content is empty")
        if "`" in self.assignment_content:
            raise ValueError("assignment_content contains a backtick; normalize it first")
        if _DOUBLE_BACKSLASH_BEFORE_LETTER.search(self.assignment_content):
            raise ValueError("assignment_content contains a doubled backslash before a LaTeX command")

    def to_dict(self) -> dict[str, str]:
        return {
            "assignment_title": self.assignment_title,
            "assignment_content": self.assignment_content,
        }

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "GeneratedAssignment":
        return cls(
            assignment_title=raw["assignment_title"],
            assignment_content=raw["assignment_content"],
        )


@dataclass(frozen=True)
class LengthReport:
    """Word-count comparison of generated content against the original.

    ``ratio`` is None when the original has no words; the bound is then
    satisfied by convention.
    """

    original_words: int
    generated_words: int
    ratio: Optional[float]
    within_bound: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "original_words": self.original_words,
            "generated_words": self.generated_words,
            "ratio": self.ratio,
            "within_bound": self.within_bound,
        }

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "LengthReport":
        return cls(
            original_words=raw["original_words"],
            generated_words=raw["generated_words"],
            ratio=raw["ratio"],
            within_bound=raw["within_bound"],
        )


@dataclass(frozen=True)
class GenerationRecord:
    """The persisted unit: result plus provenance metadata."""

    request_id: str
    task: TaskKind
    interest: str
    original_content: str
    result: GeneratedAssignment
    model_name: str
    prompt_tokens: int
    completion_tokens: int
    response_time_ms: int
    provider_id: str
    created_at: datetime
    length_report: LengthReport

    def __post_init__(self):
        if self.response_time_ms <= 0:
            raise ValueError("response_time_ms must be positive for a completed record")
        if self.prompt_tokens < 0 or self.completion_tokens < 0:
            raise ValueError("token counts must be non-negative")

    def to_dict(self) -> dict[str, Any]:
        return {
            "request_id": self.request_id,
            "task": self.task.value,
            "interest": self.interest,
            "original_content": self.original_content,
            "result": self.result.to_dict(),
            "model_name": self.model_name,
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "response_time_ms": self.response_time_ms,
            "provider_id": self.provider_id,
            "created_at": format_timestamp(self.created_at),
            "length_report": self.length_report.to_dict(),
        }

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "GenerationRecord":
        return cls(
            request_id=raw["request_id"],
            task=TaskKind.from_string(raw["task"]),
            interest=raw["interest"],
            original_content=raw["original_content"],
            result=GeneratedAssignment.from_dict(raw["result"]),
            model_name=raw["model_name"],
            prompt_tokens=raw["prompt_tokens"],
            completion_tokens=raw["completion_tokens"],
            response_time_ms=raw["response_time_ms"],
            provider_id=raw["provider_id"],
            created_at=parse_timestamp(raw["created_at"]),
            length_report=LengthReport.from_dict(raw["length_report"]),
        )

    def summary(self) -> dict[str, Any]:
        """Listing view: everything except the full content bodies."""
        return {
            "request_id": self.request_id,
            "task": self.task.value,
            "interest": self.interest,
            "assignment_title": self.result.assignment_title,
            "model_name": self.model_name,
            "provider_id": self.provider_id,
            "created_at": format_timestamp(self.created_at),
        }
