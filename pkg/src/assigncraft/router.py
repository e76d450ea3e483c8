"""Vendor-agnostic provider registry with priority routing and failover.

Providers are tried in ascending priority; equal priorities rotate
round-robin off a shared counter so healthy peers share load exactly.
Repeated failures open a per-provider circuit breaker that removes it from
rotation for a cooldown window. All health mutations happen under one lock;
the actual completion calls run outside it.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Optional, Protocol, Sequence

import httpx

from .domain import AllProvidersFailed, Attempt, Deadline, ServiceError

logger = logging.getLogger(__name__)

BREAKER_THRESHOLD = 3
BREAKER_COOLDOWN_S = 30.0
EMA_WEIGHT = 0.2

RETRYABLE_KINDS = frozenset({"timeout", "server_error", "connection"})


class UnknownProvider(ServiceError):
    code = "unknown_provider"


class ProviderFailure(Exception):
    """A single failed completion attempt against one provider."""

    def __init__(self, kind: str, detail: str = ""):
        super().__init__(f"{kind}: {detail}" if detail else kind)
        self.kind = kind
        self.detail = detail

    @property
    def retryable(self) -> bool:
        return self.kind in RETRYABLE_KINDS


@dataclass(frozen=True)
class ProviderProfile:
    provider_id: str
    model_name: str
    endpoint: str = ""
    api_key_ref: str = ""
    priority: int = 0
    timeout_ms: int = 30_000
    max_retries: int = 1
    # informational only; routing is priority + breaker + round robin
    cost_per_mtoken: Optional[float] = None

    def __post_init__(self):
        if self.timeout_ms < 1000:
            raise ValueError("timeout_ms must be at least 1000")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")


@dataclass
class ProviderHealth:
    consecutive_failures: int = 0
    open_until: Optional[float] = None  # epoch seconds, None = breaker closed
    ema_latency_ms: Optional[float] = None
    served_calls: int = 0

    def snapshot(self) -> "ProviderHealth":
        return replace(self)


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    max_tokens: int = 4096
    temperature: float = 0.0
    tag: str = ""  # template id of the rendered prompt, for call traces


@dataclass(frozen=True)
class CompletionResponse:
    text: str
    model_name: str
    prompt_tokens: int
    completion_tokens: int
    latency_ms: int
    provider_id: str
    attempts: tuple[Attempt, ...] = ()


@dataclass(frozen=True)
class RawCompletion:
    """What a transport hands back before the router fills accounting in."""

    text: str
    prompt_tokens: int = 0
    completion_tokens: int = 0
    model_name: str = ""


class Transport(Protocol):
    def __call__(self, request: CompletionRequest, timeout_s: float) -> RawCompletion: ...


# ---------------------------------------------------------------------------
# Scripted provider (deterministic test double)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScriptEntry:
    """One canned reply: either text to return or a failure to raise."""

    text: Optional[str] = None
    error: Optional[str] = None
    detail: str = ""
    prompt_tokens: int = 0
    completion_tokens: int = 0
    delay_s: float = 0.0

    @classmethod
    def ok(cls, text: str, prompt_tokens: int = 0, completion_tokens: int = 0) -> "ScriptEntry":
        return cls(text=text, prompt_tokens=prompt_tokens, completion_tokens=completion_tokens)

    @classmethod
    def fail(cls, kind: str, detail: str = "") -> "ScriptEntry":
        return cls(error=kind, detail=detail)

    @classmethod
    def from_json(cls, raw: dict[str, Any]) -> "ScriptEntry":
        return cls(
            text=raw.get("text"),
            error=raw.get("error"),
            detail=raw.get("detail", ""),
            prompt_tokens=raw.get("prompt_tokens", 0),
            completion_tokens=raw.get("completion_tokens", 0),
            delay_s=raw.get("delay_s", 0.0),
        )


class ScriptedProvider:
    """Replays a canned script in order, or defers to a responder callable.

    Every call is recorded so tests can assert the exact provider-call
    trace. An exhausted script fails the call with a non-retryable error.
    """

    def __init__(
        self,
        script: Sequence[ScriptEntry] = (),
        responder: Optional[Callable[[CompletionRequest], str]] = None,
        loop: bool = False,
    ):
        self._script = list(script)
        self._responder = responder
        self._loop = loop
        self._cursor = 0
        self._lock = threading.Lock()
        self.calls: list[CompletionRequest] = []

    @property
    def call_count(self) -> int:
        return len(self.calls)

    def calls_for_tag(self, tag: str) -> int:
        return sum(1 for call in self.calls if call.tag == tag)

    def call_tags(self) -> list[str]:
        return [call.tag for call in self.calls]

    def __call__(self, request: CompletionRequest, timeout_s: float) -> RawCompletion:
        with self._lock:
            self.calls.append(request)
            if self._responder is not None:
                entry = None
            else:
                if self._cursor >= len(self._script):
                    if self._loop and self._script:
                        self._cursor = 0
                    else:
                        raise ProviderFailure("script_exhausted", "no scripted response left")
                entry = self._script[self._cursor]
                self._cursor += 1
        if entry is None:
            return RawCompletion(text=self._responder(request))
        if entry.delay_s:
            time.sleep(entry.delay_s)
        if entry.error is not None:
            raise ProviderFailure(entry.error, entry.detail)
        return RawCompletion(
            text=entry.text or "",
            prompt_tokens=entry.prompt_tokens,
            completion_tokens=entry.completion_tokens,
        )


# ---------------------------------------------------------------------------
# HTTP transport (chat-completions wire shape)
# ---------------------------------------------------------------------------


class HttpChatTransport:
    """POSTs the rendered prompt as a single user message and reads back
    ``choices[0].message.content`` plus usage, the wire shape all supported
    providers expose."""

    def __init__(self, profile: ProviderProfile, client: Optional[httpx.Client] = None):
        self._profile = profile
        self._client = client or _shared_http_client()

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self._profile.api_key_ref:
            key = os.environ.get(self._profile.api_key_ref, "")
            if key:
                headers["Authorization"] = f"Bearer {key}"
        return headers

    def __call__(self, request: CompletionRequest, timeout_s: float) -> RawCompletion:
        body = {
            "model": self._profile.model_name,
            "messages": [{"role": "user", "content": request.prompt}],
            "max_tokens": request.max_tokens,
            "temperature": request.temperature,
        }
        try:
            response = self._client.post(
                self._profile.endpoint, json=body, headers=self._headers(), timeout=timeout_s
            )
        except httpx.TimeoutException as exc:
            raise ProviderFailure("timeout", str(exc)) from exc
        except httpx.HTTPError as exc:
            raise ProviderFailure("connection", str(exc)) from exc
        if response.status_code >= 500:
            raise ProviderFailure("server_error", f"http {response.status_code}")
        if response.status_code == 429:
            raise ProviderFailure("server_error", "http 429 (rate limited)")
        if response.status_code >= 400:
            raise ProviderFailure("bad_request", f"http {response.status_code}")
        try:
            payload = response.json()
            text = payload["choices"][0]["message"]["content"]
        except (json.JSONDecodeError, LookupError, TypeError) as exc:
            raise ProviderFailure("bad_response", f"unexpected response shape: {exc}") from exc
        if not isinstance(text, str) or not text:
            raise ProviderFailure("bad_response", "empty completion text")
        usage = payload.get("usage") or {}
        return RawCompletion(
            text=text,
            prompt_tokens=int(usage.get("prompt_tokens") or 0),
            completion_tokens=int(usage.get("completion_tokens") or 0),
            model_name=str(payload.get("model") or ""),
        )


_http_client: Optional[httpx.Client] = None
_http_client_lock = threading.Lock()


def _shared_http_client() -> httpx.Client:
    global _http_client
    with _http_client_lock:
        if _http_client is None:
            _http_client = httpx.Client(
                limits=httpx.Limits(max_connections=100, max_keepalive_connections=20)
            )
        return _http_client


# ---------------------------------------------------------------------------
# Router
# ---------------------------------------------------------------------------


@dataclass
class _Registered:
    profile: ProviderProfile
    transport: Transport
    health: ProviderHealth = field(default_factory=ProviderHealth)


class Router:
    """Routes completion requests across registered providers with failover."""

    def __init__(
        self,
        clock: Callable[[], float] = time.time,
        breaker_threshold: int = BREAKER_THRESHOLD,
        breaker_cooldown_s: float = BREAKER_COOLDOWN_S,
        ema_weight: float = EMA_WEIGHT,
    ):
        self._clock = clock
        self._breaker_threshold = breaker_threshold
        self._breaker_cooldown_s = breaker_cooldown_s
        self._ema_weight = ema_weight
        self._lock = threading.Lock()
        self._providers: dict[str, _Registered] = {}
        self._order: list[str] = []  # registration order, for stable ties
        self._rr_counters: dict[int, int] = {}

    # -- registration -------------------------------------------------------

    def register(self, profile: ProviderProfile, transport: Transport) -> None:
        with self._lock:
            if profile.provider_id in self._providers:
                raise ValueError(f"provider {profile.provider_id!r} already registered")
            self._providers[profile.provider_id] = _Registered(profile=profile, transport=transport)
            self._order.append(profile.provider_id)

    def register_http_provider(self, profile: ProviderProfile, client: Optional[httpx.Client] = None) -> None:
        self.register(profile, HttpChatTransport(profile, client=client))

    def register_scripted_provider(
        self,
        script: Sequence[ScriptEntry] = (),
        *,
        responder: Optional[Callable[[CompletionRequest], str]] = None,
        loop: bool = False,
        provider_id: str = "scripted",
        model_name: str = "scripted-model",
        priority: int = 0,
        max_retries: int = 1,
        timeout_ms: int = 30_000,
    ) -> ScriptedProvider:
        provider = ScriptedProvider(script=script, responder=responder, loop=loop)
        profile = ProviderProfile(
            provider_id=provider_id,
            model_name=model_name,
            endpoint="scripted:",
            priority=priority,
            timeout_ms=timeout_ms,
            max_retries=max_retries,
        )
        self.register(profile, provider)
        return provider

    # -- health -------------------------------------------------------------

    def record_outcome(self, provider_id: str, success: bool, latency_ms: float) -> ProviderHealth:
        with self._lock:
            entry = self._providers.get(provider_id)
            if entry is None:
                raise UnknownProvider(f"unknown provider {provider_id!r}")
            health = entry.health
            if health.ema_latency_ms is None:
                health.ema_latency_ms = float(latency_ms)
            else:
                health.ema_latency_ms = (
                    self._ema_weight * latency_ms + (1.0 - self._ema_weight) * health.ema_latency_ms
                )
            if success:
                health.consecutive_failures = 0
                health.open_until = None
                health.served_calls += 1
            else:
                health.consecutive_failures += 1
                if health.consecutive_failures >= self._breaker_threshold:
                    health.open_until = self._clock() + self._breaker_cooldown_s
            return health.snapshot()

    def health(self, provider_id: str) -> ProviderHealth:
        with self._lock:
            entry = self._providers.get(provider_id)
            if entry is None:
                raise UnknownProvider(f"unknown provider {provider_id!r}")
            return entry.health.snapshot()

    def health_snapshot(self) -> list[dict[str, Any]]:
        """Per-provider routing state for the health endpoint. No secrets:
        key references stay out, key values never enter the registry."""
        now = self._clock()
        rows = []
        with self._lock:
            for provider_id in self._order:
                entry = self._providers[provider_id]
                health = entry.health
                open_now = health.open_until is not None and now < health.open_until
                rows.append(
                    {
                        "provider_id": provider_id,
                        "model_name": entry.profile.model_name,
                        "priority": entry.profile.priority,
                        "breaker": "open" if open_now else "closed",
                        "consecutive_failures": health.consecutive_failures,
                        "ema_latency_ms": health.ema_latency_ms,
                        "served_calls": health.served_calls,
                    }
                )
        return rows

    def served_calls(self, provider_id: str) -> int:
        return self.health(provider_id).served_calls

    # -- routing ------------------------------------------------------------

    def _priority_groups(self) -> list[tuple[int, list[str]]]:
        groups: dict[int, list[str]] = {}
        for provider_id in self._order:
            groups.setdefault(self._providers[provider_id].profile.priority, []).append(provider_id)
        return sorted(groups.items())

    def route(self, request: CompletionRequest, deadline: Optional[Deadline] = None) -> CompletionResponse:
        attempts: list[Attempt] = []
        with self._lock:
            if not self._providers:
                raise AllProvidersFailed(())
            groups = self._priority_groups()
        for priority, group in groups:
            with self._lock:
                offset = self._rr_counters.get(priority, 0)
                self._rr_counters[priority] = offset + 1
            start = offset % len(group)
            ordered = group[start:] + group[:start]
            for provider_id in ordered:
                entry = self._providers[provider_id]
                with self._lock:
                    open_until = entry.health.open_until
                if open_until is not None and self._clock() < open_until:
                    attempts.append(Attempt(provider_id, "skipped", "circuit open"))
                    continue
                response = self._attempt_provider(entry, request, deadline, attempts)
                if response is not None:
                    return replace(response, attempts=tuple(attempts))
        raise AllProvidersFailed(tuple(attempts))

    def _attempt_provider(
        self,
        entry: _Registered,
        request: CompletionRequest,
        deadline: Optional[Deadline],
        attempts: list[Attempt],
    ) -> Optional[CompletionResponse]:
        profile = entry.profile
        for _try in range(profile.max_retries + 1):
            timeout_s = profile.timeout_ms / 1000.0
            if deadline is not None:
                deadline.check()
                timeout_s = min(timeout_s, max(deadline.remaining_s(), 0.001))
                deadline.note_attempt()
            started = self._clock()
            try:
                raw = entry.transport(request, timeout_s)
            except ProviderFailure as failure:
                latency_ms = max(0, int((self._clock() - started) * 1000))
                attempts.append(Attempt(profile.provider_id, failure.kind, failure.detail, latency_ms))
                self.record_outcome(profile.provider_id, False, latency_ms)
                logger.warning(
                    "provider attempt failed: provider=%s kind=%s detail=%s",
                    profile.provider_id, failure.kind, failure.detail,
                )
                if not failure.retryable:
                    return None
                continue
            latency_ms = max(0, int((self._clock() - started) * 1000))
            attempts.append(Attempt(profile.provider_id, "ok", "", latency_ms))
            self.record_outcome(profile.provider_id, True, latency_ms)
            return CompletionResponse(
                text=raw.text,
                model_name=raw.model_name or profile.model_name,
                prompt_tokens=raw.prompt_tokens,
                completion_tokens=raw.completion_tokens,
                latency_ms=latency_ms,
                provider_id=profile.provider_id,
            )
        return None
