"""HTTP front door.

Thin handlers over the pipeline: parse the body, run, map errors to status
codes. Guardrail rejections are client faults (400) and carry the
moderator's explanation verbatim; everything downstream of a healthy
request is a 5xx. Responses never echo API keys or rendered prompts.
"""

from __future__ import annotations

import json
import logging
from typing import Any, Optional

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from starlette.concurrency import run_in_threadpool
from starlette.middleware.cors import CORSMiddleware

from .config import ServiceConfig, build_router
from .domain import (
    AllProvidersFailed,
    Deadline,
    DeadlineExceeded,
    InvalidAssignment,
    InvalidInterest,
    InvalidRequest,
    MalformedModelOutput,
    MediaKind,
    ServiceError,
    StorageFailure,
    TaskKind,
    UnsafeOutput,
)
from .guardrails import (
    DEFAULT_INJECTION_PATTERNS,
    DEFAULT_STOP_LIST,
    Guardrails,
    load_pattern_file,
)
from .pipeline import Pipeline
from .router import Router
from .storage import FileStore, NotFound, RecordStore, TooLarge
from . import templates

logger = logging.getLogger(__name__)

_STATUS_BY_CODE = {
    InvalidRequest.code: 400,
    InvalidInterest.code: 400,
    InvalidAssignment.code: 400,
    TooLarge.code: 413,
    UnsafeOutput.code: 502,
    MalformedModelOutput.code: 502,
    AllProvidersFailed.code: 503,
    StorageFailure.code: 500,
    DeadlineExceeded.code: 504,
    NotFound.code: 404,
}


class Service:
    """All wired components behind one HTTP app."""

    def __init__(
        self,
        router: Router,
        catalog: templates.PromptCatalog,
        records: RecordStore,
        files: FileStore,
        guardrails: Guardrails,
        pipeline: Pipeline,
        config: ServiceConfig,
    ):
        self.router = router
        self.catalog = catalog
        self.records = records
        self.files = files
        self.guardrails = guardrails
        self.pipeline = pipeline
        self.config = config

    @classmethod
    def from_config(cls, config: ServiceConfig) -> "Service":
        router = build_router(config)
        catalog = templates.load_catalog(config.prompts_dir)
        records = RecordStore(config.data_dir)
        files = FileStore(config.data_dir, max_bytes=config.max_file_bytes)
        injection = DEFAULT_INJECTION_PATTERNS
        if config.injection_patterns_path:
            injection = load_pattern_file(config.injection_patterns_path)
        stop_list = DEFAULT_STOP_LIST
        if config.stop_list_path:
            stop_list = load_pattern_file(config.stop_list_path)
        guardrails = Guardrails(router, catalog, injection_patterns=injection, stop_list=stop_list)
        pipeline = Pipeline(
            router,
            catalog,
            guardrails,
            records,
            files,
            pdf_parallelism=config.pdf_parallelism,
        )
        return cls(router, catalog, records, files, guardrails, pipeline, config)


def _error_response(exc: ServiceError, status: Optional[int] = None) -> JSONResponse:
    body: dict[str, Any] = {"code": exc.code, "message": exc.message}
    if exc.explanation is not None:
        body["explanation"] = exc.explanation
    if isinstance(exc, DeadlineExceeded):
        body["attempts"] = exc.attempts
    if isinstance(exc, AllProvidersFailed):
        body["attempts"] = len(exc.attempts)
    return JSONResponse(status_code=status or _STATUS_BY_CODE.get(exc.code, 500), content=body)


_MEDIA_KINDS = {
    "application/pdf": MediaKind.PDF,
    "text/plain": MediaKind.PLAIN_TEXT,
    "text/markdown": MediaKind.PLAIN_TEXT,
}


def create_app(service: Service, ui_dir: Optional[Path] = None) -> FastAPI:
    app = FastAPI(title="assigncraft", docs_url=None, redoc_url=None)
    max_body = service.config.max_body_bytes
    # The service is self-hosted and unauthenticated by design; a UI served
    # from another origin must still be able to call it.
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(ServiceError)
    async def handle_service_error(_request: Request, exc: ServiceError):
        if not exc.client_fault:
            logger.error("request failed: %s (%s)", exc.code, exc.message)
        return _error_response(exc)

    @app.exception_handler(RequestValidationError)
    async def handle_validation_error(_request: Request, exc: RequestValidationError):
        return _error_response(InvalidRequest(f"invalid request: {exc.errors()[0].get('msg', 'bad input')}"))

    @app.exception_handler(Exception)
    async def handle_unexpected(_request: Request, exc: Exception):
        logger.exception("unhandled error")
        return _error_response(ServiceError("internal error"))

    async def _read_body(request: Request) -> bytes:
        body = await request.body()
        if len(body) > max_body:
            raise TooLarge(f"request body exceeds {max_body} bytes")
        return body

    async def _read_json(request: Request) -> dict[str, Any]:
        body = await _read_body(request)
        try:
            payload = json.loads(body)
        except json.JSONDecodeError:
            raise InvalidRequest("request body must be valid JSON") from None
        if not isinstance(payload, dict):
            raise InvalidRequest("request body must be a JSON object")
        return payload

    async def _generate(payload: dict[str, Any], task: str) -> JSONResponse:
        payload = dict(payload)
        payload["task"] = task
        deadline = Deadline(service.config.deadline_ms)
        # The pipeline blocks on provider calls; keep it off the event loop.
        record = await run_in_threadpool(service.pipeline.run_event, payload, deadline)
        return JSONResponse(status_code=201, content=record.to_dict())

    @app.post("/v1/assignments:personalize")
    async def personalize(request: Request):
        return await _generate(await _read_json(request), TaskKind.PERSONALIZE.value)

    @app.post("/v1/assignments:simplify")
    async def simplify(request: Request):
        return await _generate(await _read_json(request), TaskKind.SIMPLIFY.value)

    @app.post("/v1/files")
    async def upload_file(request: Request):
        content_type = request.headers.get("content-type", "").split(";")[0].strip().lower()
        media_kind = _MEDIA_KINDS.get(content_type)
        if media_kind is None:
            raise InvalidRequest(
                "unsupported content type; use application/pdf or text/plain"
            )
        body = await _read_body(request)
        if not body:
            raise InvalidRequest("file body is empty")
        file_id = await run_in_threadpool(service.files.put_file, body, media_kind)
        return JSONResponse(
            status_code=201,
            content={"file_id": file_id, "media_kind": media_kind.value, "size": len(body)},
        )

    @app.get("/v1/assignments/{request_id}")
    async def get_assignment(request_id: str):
        record = await run_in_threadpool(service.records.get_record, request_id)
        return record.to_dict()

    @app.get("/v1/assignments")
    async def list_assignments(limit: int = 50, task: Optional[str] = None):
        if limit < 1:
            raise InvalidRequest("limit must be at least 1")
        kind = TaskKind.from_string(task) if task is not None else None
        summaries = service.records.list_records(task=kind, limit=limit)
        return {"records": [s.to_dict() for s in summaries]}

    @app.get("/v1/health")
    async def health():
        return {"status": "ok", "providers": service.router.health_snapshot()}

    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def create_app_from_config(config: ServiceConfig, ui_dir: Optional[Path] = None) -> FastAPI:
    return create_app(Service.from_config(config), ui_dir=ui_dir)
