"""Five-stage generation pipeline.

Order per request: parse/validate, resolve the source text locally, run
input guardrails (interest first: cheapest rejection wins), convert PDF
pages to Markdown, call the main model, normalize and safety-check the
output, persist exactly one record. Provider calls therefore always trace
as a prefix of [interest_guardrails, assignment_guardrails, pdf_ocr...,
main task, output_guardrails]; a rejection truncates the trace there, and
no generation call ever happens after a guardrail rejection.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Mapping, Optional

from . import templates
from .domain import (
    AllProvidersFailed,
    AssignmentSource,
    Deadline,
    DocumentSource,
    GenerationRecord,
    InvalidAssignment,
    InvalidInterest,
    InvalidRequest,
    MediaKind,
    PersonalizationRequest,
    StorageFailure,
    TaskKind,
    TextSource,
    UnsafeOutput,
    utc_now,
)
from .guardrails import Guardrails
from .normalize import check_length, extract_json, parse_assignment
from .pdf import PdfError, extract_page_texts
from .router import CompletionRequest, Router
from .storage import DuplicateKey, FileStore, NotFound, RecordStore

logger = logging.getLogger(__name__)

DEFAULT_PDF_PARALLELISM = 4

MAIN_TASK_TEMPLATES = {
    TaskKind.PERSONALIZE: templates.PERSONALIZE_ASSIGNMENT,
    TaskKind.SIMPLIFY: templates.SIMPLIFY_ASSIGNMENT,
}


def parse_event(raw: Mapping[str, Any]) -> PersonalizationRequest:
    """Turn a syntactically valid inbound payload into a typed request.

    Exactly one of ``text``/``file_id`` selects the source; the task string
    must name a known task. All violations are client faults.
    """
    if not isinstance(raw, Mapping):
        raise InvalidRequest("request body must be a JSON object")
    task = TaskKind.from_string(_required_str(raw, "task"))
    interest = raw.get("interest")
    if not isinstance(interest, str) or not interest:
        raise InvalidInterest("interest is required")
    has_text = raw.get("text") is not None
    has_file = raw.get("file_id") is not None
    if has_text == has_file:
        raise InvalidRequest("provide exactly one source: text or file_id")
    if has_text:
        text = raw["text"]
        if not isinstance(text, str):
            raise InvalidRequest("text must be a string")
        source: AssignmentSource = TextSource(content=text)
    else:
        file_id = raw["file_id"]
        if not isinstance(file_id, str):
            raise InvalidRequest("file_id must be a string")
        media_kind = None
        if raw.get("media_kind") is not None:
            media_kind = MediaKind.from_string(raw["media_kind"])
        source = DocumentSource(file_id=file_id, media_kind=media_kind)
    return PersonalizationRequest.new(task=task, source=source, interest=interest)


def _required_str(raw: Mapping[str, Any], key: str) -> str:
    value = raw.get(key)
    if not isinstance(value, str) or not value:
        raise InvalidRequest(f"{key} is required")
    return value


class Pipeline:
    """Executes requests against one router/store wiring.

    Stateless between runs apart from the shared services, so one instance
    serves concurrent requests.
    """

    def __init__(
        self,
        router: Router,
        catalog: templates.PromptCatalog,
        guardrails: Guardrails,
        records: RecordStore,
        files: Optional[FileStore] = None,
        pdf_parallelism: int = DEFAULT_PDF_PARALLELISM,
        clock=time.monotonic,
    ):
        self._router = router
        self._catalog = catalog
        self._guardrails = guardrails
        self._records = records
        self._files = files
        self._pdf_parallelism = max(1, pdf_parallelism)
        self._clock = clock

    # -- source handling ----------------------------------------------------

    def _load_raw_source(self, source: AssignmentSource) -> tuple[str, Optional[list[str]]]:
        """Fetch and locally extract the submitted assignment.

        Returns (raw_text, pdf_pages); pdf_pages is None unless the source
        is a PDF that still needs Markdown conversion. No provider calls
        happen here.
        """
        if isinstance(source, TextSource):
            return source.content, None
        assert isinstance(source, DocumentSource)
        if self._files is None:
            raise InvalidRequest("file submissions are not enabled")
        try:
            stored = self._files.get_file(source.file_id)
        except NotFound:
            raise InvalidAssignment(f"file not found: {source.file_id}") from None
        media_kind = source.media_kind or stored.media_kind
        if media_kind is MediaKind.PLAIN_TEXT:
            try:
                text = stored.data.decode("utf-8")
            except UnicodeDecodeError:
                raise InvalidAssignment("file is not valid UTF-8 text") from None
            if not text.strip():
                raise InvalidAssignment("assignment text is empty")
            return text, None
        try:
            pages = extract_page_texts(stored.data)
        except PdfError as exc:
            raise InvalidAssignment(f"unreadable PDF: {exc}") from None
        pages = [page for page in pages if page.strip()]
        if not pages:
            raise InvalidAssignment("no text layer in PDF")
        return "\n\n".join(pages), pages

    def _convert_pages(self, pages: list[str], deadline: Optional[Deadline]) -> str:
        """pdf_ocr fan-out: convert each page to Markdown, keeping order.
        Parallelism is bounded; this is the only intra-request concurrency."""

        def convert(page: str) -> str:
            rendered = self._catalog.render(templates.PDF_OCR, {"page_text": page})
            response = self._router.route(
                CompletionRequest(prompt=rendered.text, tag=templates.PDF_OCR), deadline=deadline
            )
            return response.text.strip()

        if len(pages) == 1:
            return convert(pages[0])
        with ThreadPoolExecutor(max_workers=min(self._pdf_parallelism, len(pages))) as pool:
            converted = list(pool.map(convert, pages))
        return "\n\n".join(converted)

    def resolve_source(self, source: AssignmentSource, deadline: Optional[Deadline] = None) -> str:
        """Full source resolution: text passes through; PDFs are extracted
        per page, converted to Markdown, and joined with blank lines."""
        raw_text, pages = self._load_raw_source(source)
        if pages is None:
            return raw_text
        return self._convert_pages(pages, deadline)

    # -- pipeline -----------------------------------------------------------

    def run(self, request: PersonalizationRequest, deadline: Optional[Deadline] = None) -> GenerationRecord:
        """Run all five stages; on success exactly one record is persisted
        and returned, on failure none is (the attempt trail of a total
        provider failure is kept separately for audit)."""
        try:
            return self._execute(request, deadline)
        except AllProvidersFailed as exc:
            try:
                self._records.put_attempt_log(request.request_id, exc.attempts)
            except OSError:
                logger.exception("could not persist attempt log for %s", request.request_id)
            raise

    def _execute(self, request: PersonalizationRequest, deadline: Optional[Deadline]) -> GenerationRecord:
        started = self._clock()
        log = logger.getChild("run")

        # Stage 2a: local source resolution (no provider calls yet).
        raw_text, pdf_pages = self._load_raw_source(request.source)

        # Stage 2b: input guardrails, interest before assignment.
        if deadline is not None:
            deadline.check()
        decision = self._guardrails.check_interest(request.interest, deadline)
        if decision.rejected:
            log.info("request %s: interest rejected at %s", request.request_id, decision.stage.value)
            raise InvalidInterest(decision.explanation)
        if deadline is not None:
            deadline.check()
        decision = self._guardrails.moderate_assignment(raw_text, deadline)
        if decision.rejected:
            log.info("request %s: assignment rejected", request.request_id)
            raise InvalidAssignment(decision.explanation)

        # Stage 3: Markdown conversion for PDFs, then the main model call.
        if pdf_pages is not None:
            if deadline is not None:
                deadline.check()
            original = self._convert_pages(pdf_pages, deadline)
        else:
            original = raw_text
        if deadline is not None:
            deadline.check()
        template_id = MAIN_TASK_TEMPLATES[request.task]
        variables = {"interest": request.interest}
        if request.task is TaskKind.PERSONALIZE:
            variables["general_assignment"] = original
        else:
            variables["assignment"] = original
        rendered = self._catalog.render(template_id, variables)
        response = self._router.route(
            CompletionRequest(prompt=rendered.text, tag=template_id, temperature=0.7),
            deadline=deadline,
        )

        # Stage 4: normalization, length audit, output guardrails.
        repairs: list[str] = []
        extraction = extract_json(response.text)
        repairs.extend(extraction.repairs_applied)
        result = parse_assignment(extraction.payload, repairs)
        if repairs:
            log.info("request %s: output repairs %s", request.request_id, repairs)
        length_report = check_length(original, result.assignment_content)
        if not length_report.within_bound:
            log.warning(
                "request %s: generated content exceeds the length bound (ratio %.2f)",
                request.request_id,
                length_report.ratio or 0.0,
            )
        if deadline is not None:
            deadline.check()
        decision = self._guardrails.moderate_output(result.assignment_content, deadline)
        if decision.rejected:
            log.info("request %s: output rejected", request.request_id)
            raise UnsafeOutput(decision.explanation)

        # Stage 5: persist exactly once.
        elapsed_ms = max(1, int((self._clock() - started) * 1000))
        record = GenerationRecord(
            request_id=request.request_id,
            task=request.task,
            interest=request.interest,
            original_content=original,
            result=result,
            model_name=response.model_name,
            prompt_tokens=response.prompt_tokens,
            completion_tokens=response.completion_tokens,
            response_time_ms=elapsed_ms,
            provider_id=response.provider_id,
            created_at=utc_now(),
            length_report=length_report,
        )
        try:
            self._records.put_record(record)
        except DuplicateKey as exc:
            raise StorageFailure(str(exc)) from exc
        log.info(
            "request %s: stored (provider=%s model=%s %dms)",
            request.request_id, record.provider_id, record.model_name, record.response_time_ms,
        )
        return record

    def run_event(self, raw: Mapping[str, Any], deadline: Optional[Deadline] = None) -> GenerationRecord:
        """parse_event + run in one call; what the API handlers use."""
        return self.run(parse_event(raw), deadline=deadline)
