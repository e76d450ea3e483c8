"""Service configuration: one declarative YAML document.

Secrets never live in the file; providers name the environment variable
holding their key via ``api_key_ref``. Scripted providers exist so the
whole service can run against canned scripts (demos, replay, load tests).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import yaml

from .demo import demo_responder
from .domain import ServiceError
from .pipeline import DEFAULT_PDF_PARALLELISM
from .router import ProviderProfile, Router, ScriptEntry, ScriptedProvider
from .storage import DEFAULT_MAX_FILE_BYTES

DEFAULT_DEADLINE_MS = 60_000
DEFAULT_MAX_BODY_BYTES = 12 * 1024 * 1024
DEFAULT_LISTEN = "127.0.0.1:8080"


class ConfigError(ServiceError):
    code = "config_error"


@dataclass(frozen=True)
class ProviderConfig:
    profile: ProviderProfile
    kind: str = "http"  # "http" | "scripted"
    script_path: Optional[Path] = None
    script_mode: str = "auto"  # "auto" responder | "sequence" canned replies
    loop: bool = False


@dataclass(frozen=True)
class ServiceConfig:
    providers: tuple[ProviderConfig, ...]
    listen_host: str = "127.0.0.1"
    listen_port: int = 8080
    data_dir: Path = Path("data")
    prompts_dir: Optional[Path] = None
    pdf_parallelism: int = DEFAULT_PDF_PARALLELISM
    injection_patterns_path: Optional[Path] = None
    stop_list_path: Optional[Path] = None
    max_body_bytes: int = DEFAULT_MAX_BODY_BYTES
    max_file_bytes: int = DEFAULT_MAX_FILE_BYTES
    deadline_ms: int = DEFAULT_DEADLINE_MS
    breaker_threshold: int = 3
    breaker_cooldown_s: float = 30.0

    def validate(self) -> None:
        if not self.providers:
            raise ConfigError("at least one provider is required")
        ids = [p.profile.provider_id for p in self.providers]
        if len(set(ids)) != len(ids):
            raise ConfigError("provider_id values must be unique")
        slowest = max(p.profile.timeout_ms for p in self.providers)
        if self.deadline_ms < slowest:
            raise ConfigError(
                f"deadline_ms ({self.deadline_ms}) must cover the slowest provider timeout ({slowest})"
            )
        for provider in self.providers:
            if provider.kind not in ("http", "scripted"):
                raise ConfigError(f"unknown provider kind {provider.kind!r}")
            if provider.kind == "http" and not provider.profile.endpoint:
                raise ConfigError(f"provider {provider.profile.provider_id!r} needs an endpoint")
            if provider.kind == "scripted" and provider.script_mode not in ("auto", "sequence"):
                raise ConfigError(f"unknown script_mode {provider.script_mode!r}")
            if provider.kind == "scripted" and provider.script_mode == "sequence" and provider.script_path is None:
                raise ConfigError("sequence-scripted providers need a script path")


def _parse_listen(raw: str) -> tuple[str, int]:
    host, sep, port = raw.rpartition(":")
    if not sep or not port.isdigit():
        raise ConfigError(f"listen address must look like host:port, got {raw!r}")
    return host or "127.0.0.1", int(port)


def _optional_path(raw: Any, base: Path) -> Optional[Path]:
    if raw is None:
        return None
    path = Path(str(raw))
    return path if path.is_absolute() else base / path


def load_config(path: Path | str) -> ServiceConfig:
    """Read, type-check, and validate a config file."""
    path = Path(path)
    try:
        document = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
    if not isinstance(document, dict):
        raise ConfigError("config must be a mapping")
    base = path.parent
    providers = []
    for raw in document.get("providers") or []:
        if not isinstance(raw, dict):
            raise ConfigError("each provider must be a mapping")
        try:
            profile = ProviderProfile(
                provider_id=str(raw["provider_id"]),
                model_name=str(raw.get("model_name", "")),
                endpoint=str(raw.get("endpoint", "")),
                api_key_ref=str(raw.get("api_key_ref", "")),
                priority=int(raw.get("priority", 0)),
                timeout_ms=int(raw.get("timeout_ms", 30_000)),
                max_retries=int(raw.get("max_retries", 1)),
                cost_per_mtoken=(
                    float(raw["cost_per_mtoken"]) if raw.get("cost_per_mtoken") is not None else None
                ),
            )
        except KeyError as exc:
            raise ConfigError(f"provider is missing {exc.args[0]!r}") from None
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        providers.append(
            ProviderConfig(
                profile=profile,
                kind=str(raw.get("kind", "http")),
                script_path=_optional_path(raw.get("script"), base),
                script_mode=str(raw.get("script_mode", "auto")),
                loop=bool(raw.get("loop", False)),
            )
        )
    listen_host, listen_port = _parse_listen(str(document.get("listen", DEFAULT_LISTEN)))
    config = ServiceConfig(
        providers=tuple(providers),
        listen_host=listen_host,
        listen_port=listen_port,
        data_dir=_optional_path(document.get("data_dir"), base) or base / "data",
        prompts_dir=_optional_path(document.get("prompts_dir"), base),
        pdf_parallelism=int(document.get("pdf_parallelism", DEFAULT_PDF_PARALLELISM)),
        injection_patterns_path=_optional_path(document.get("injection_patterns"), base),
        stop_list_path=_optional_path(document.get("stop_list"), base),
        max_body_bytes=int(document.get("max_body_bytes", DEFAULT_MAX_BODY_BYTES)),
        max_file_bytes=int(document.get("max_file_bytes", DEFAULT_MAX_FILE_BYTES)),
        deadline_ms=int(document.get("deadline_ms", DEFAULT_DEADLINE_MS)),
        breaker_threshold=int(document.get("breaker_threshold", 3)),
        breaker_cooldown_s=float(document.get("breaker_cooldown_s", 30.0)),
    )
    config.validate()
    return config


def load_script(path: Path) -> list[ScriptEntry]:
    try:
        entries = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read script {path}: {exc}") from exc
    if not isinstance(entries, list):
        raise ConfigError(f"script {path} must be a JSON array")
    return [ScriptEntry.from_json(entry) for entry in entries]


def build_router(config: ServiceConfig) -> Router:
    router = Router(
        breaker_threshold=config.breaker_threshold,
        breaker_cooldown_s=config.breaker_cooldown_s,
    )
    for provider in config.providers:
        if provider.kind == "http":
            router.register_http_provider(provider.profile)
        elif provider.script_mode == "auto":
            router.register(provider.profile, ScriptedProvider(responder=demo_responder))
        else:
            script = load_script(provider.script_path)
            router.register(provider.profile, ScriptedProvider(script=script, loop=provider.loop))
    return router
