"""Maintenance CLI: serve, validate-config, replay, prompts list."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path
from typing import Optional

from . import templates
from .config import ConfigError, ServiceConfig, load_config, load_script
from .domain import ServiceError
from .guardrails import Guardrails
from .pipeline import Pipeline, parse_event
from .router import Router
from .storage import RecordStore, canonical_json

logger = logging.getLogger(__name__)

# Fields that legitimately differ between replay runs.
VOLATILE_RECORD_FIELDS = ("request_id", "created_at", "response_time_ms")


def configure_logging() -> None:
    level = os.environ.get("LOG_LEVEL", "INFO").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s %(message)s",
    )


def _load_config_or_exit(path: str) -> ServiceConfig:
    try:
        return load_config(path)
    except ConfigError as exc:
        print(f"config error: {exc.message}", file=sys.stderr)
        raise SystemExit(2)


def _apply_overrides(config: ServiceConfig, args: argparse.Namespace) -> ServiceConfig:
    if getattr(args, "listen", None):
        host, _, port = args.listen.rpartition(":")
        config = replace(config, listen_host=host or "127.0.0.1", listen_port=int(port))
    if getattr(args, "data_dir", None):
        config = replace(config, data_dir=Path(args.data_dir))
    return config


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .api import create_app_from_config

    config = _apply_overrides(_load_config_or_exit(args.config), args)
    ui_dir = Path(args.ui_dir) if args.ui_dir else None
    if ui_dir is not None and not ui_dir.is_dir():
        print(f"ui directory not found: {ui_dir}", file=sys.stderr)
        return 2
    app = create_app_from_config(config, ui_dir=ui_dir)
    uvicorn.run(app, host=config.listen_host, port=config.listen_port, log_level="info")
    return 0


def cmd_validate_config(args: argparse.Namespace) -> int:
    config = _load_config_or_exit(args.config)
    print(
        f"config ok: {len(config.providers)} provider(s), "
        f"listen {config.listen_host}:{config.listen_port}, data dir {config.data_dir}"
    )
    return 0


def cmd_prompts_list(_args: argparse.Namespace) -> int:
    catalog = templates.load_catalog()
    width = max(len(tid) for tid in templates.TEMPLATE_IDS)
    role_width = max(len(role) for role in templates.ROLE_NAMES.values())
    for template_id, role_name, required_vars in catalog.entries():
        vars_text = ", ".join(sorted(required_vars))
        print(f"{template_id:<{width}}  {role_name:<{role_width}}  vars: {vars_text}")
    return 0


def _strip_volatile(record: dict) -> dict:
    return {k: v for k, v in record.items() if k not in VOLATILE_RECORD_FIELDS}


def replay_case(case_dir: Path, data_dir: Path) -> tuple[bool, str]:
    """Run one recorded request against its provider script and diff the
    stored record against the expected canonical JSON."""
    request_raw = json.loads((case_dir / "request.json").read_text(encoding="utf-8"))
    script = load_script(case_dir / "script.json")
    expected = json.loads((case_dir / "expected_record.json").read_text(encoding="utf-8"))

    router = Router()
    router.register_scripted_provider(script, provider_id="replay", model_name="replay-model")
    catalog = templates.load_catalog()
    records = RecordStore(data_dir / case_dir.name, durable=False)
    guardrails = Guardrails(router, catalog)
    pipeline = Pipeline(router, catalog, guardrails, records)

    try:
        record = pipeline.run(parse_event(request_raw))
    except ServiceError as exc:
        return False, f"pipeline failed: {exc.code}: {exc.message}"

    stored = records.get_record(record.request_id)
    actual_json = canonical_json(_strip_volatile(stored.to_dict()))
    expected_json = canonical_json(_strip_volatile(expected))
    if actual_json != expected_json:
        return False, _first_difference(expected_json, actual_json)
    return True, ""


def _first_difference(expected: str, actual: str) -> str:
    for i, (e, a) in enumerate(zip(expected, actual)):
        if e != a:
            lo = max(0, i - 40)
            return (
                f"records differ at byte {i}:\n"
                f"  expected ...{expected[lo:i + 40]!r}\n"
                f"  actual   ...{actual[lo:i + 40]!r}"
            )
    return f"records differ in length: expected {len(expected)} bytes, actual {len(actual)}"


def cmd_replay(args: argparse.Namespace) -> int:
    fixture_dir = Path(args.fixture_dir)
    case_dirs = sorted(d for d in fixture_dir.iterdir() if (d / "request.json").is_file())
    if not case_dirs:
        print(f"no replay cases under {fixture_dir}", file=sys.stderr)
        return 2
    failures = 0
    with tempfile.TemporaryDirectory(prefix="assigncraft-replay-") as tmp:
        for case_dir in case_dirs:
            ok, detail = replay_case(case_dir, Path(tmp))
            if ok:
                print(f"PASS {case_dir.name}")
            else:
                failures += 1
                print(f"FAIL {case_dir.name}: {detail}")
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="assigncraft", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--config", required=True, help="path to the service config file")
    serve.add_argument("--listen", help="override listen address (host:port)")
    serve.add_argument("--data-dir", help="override the data directory")
    serve.add_argument("--ui-dir", help="also serve a static web UI from this directory")
    serve.set_defaults(func=cmd_serve)

    validate = sub.add_parser("validate-config", help="check a config file and exit")
    validate.add_argument("--config", required=True)
    validate.set_defaults(func=cmd_validate_config)

    replay = sub.add_parser("replay", help="re-run recorded fixtures and diff the records")
    replay.add_argument("fixture_dir", help="directory of replay cases")
    replay.set_defaults(func=cmd_replay)

    prompts = sub.add_parser("prompts", help="prompt template utilities")
    prompts_sub = prompts.add_subparsers(dest="prompts_command", required=True)
    prompts_list = prompts_sub.add_parser("list", help="print the template catalog")
    prompts_list.set_defaults(func=cmd_prompts_list)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    configure_logging()
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
