"""Prompt templates and rendering.

Templates live as plain-text files in the packaged ``prompts/`` directory
(one file per template id) and are immutable after load. Placeholders use
single-brace ``{name}`` syntax; doubled braces are literal-brace escapes,
so ``{{`` renders as ``{`` and ``}}`` as ``}``. Values are substituted
verbatim with no escaping; defending against injection is the guardrails'
job, not the renderer's.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping

from .domain import ServiceError

PERSONALIZE_ASSIGNMENT = "personalize_assignment"
SIMPLIFY_ASSIGNMENT = "simplify_assignment"
ASSIGNMENT_GUARDRAILS = "assignment_guardrails"
INTEREST_GUARDRAILS = "interest_guardrails"
OUTPUT_GUARDRAILS = "output_guardrails"
PDF_OCR = "pdf_ocr"

TEMPLATE_IDS = (
    PERSONALIZE_ASSIGNMENT,
    SIMPLIFY_ASSIGNMENT,
    ASSIGNMENT_GUARDRAILS,
    INTEREST_GUARDRAILS,
    OUTPUT_GUARDRAILS,
    PDF_OCR,
)

ROLE_NAMES = {
    PERSONALIZE_ASSIGNMENT: "Learning Experience Designer",
    SIMPLIFY_ASSIGNMENT: "Content Writer",
    ASSIGNMENT_GUARDRAILS: "Content Moderator",
    INTEREST_GUARDRAILS: "Content Moderator",
    OUTPUT_GUARDRAILS: "Safety Checker",
    PDF_OCR: "Document Processor",
}

REQUIRED_VARS = {
    PERSONALIZE_ASSIGNMENT: frozenset({"general_assignment", "interest"}),
    SIMPLIFY_ASSIGNMENT: frozenset({"assignment", "interest"}),
    ASSIGNMENT_GUARDRAILS: frozenset({"assignment"}),
    INTEREST_GUARDRAILS: frozenset({"interest"}),
    OUTPUT_GUARDRAILS: frozenset({"content"}),
    PDF_OCR: frozenset({"page_text"}),
}

_TOKEN = re.compile(r"\{\{|\}\}|\{([A-Za-z_][A-Za-z0-9_]*)\}|\{|\}")


class TemplateError(ServiceError):
    """Internal fault: a template or a render call violated its contract."""

    code = "template_error"


@dataclass(frozen=True)
class PromptTemplate:
    template_id: str
    role_name: str
    body: str
    required_vars: frozenset[str]

    def sha256(self) -> str:
        return hashlib.sha256(self.body.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class RenderedPrompt:
    template_id: str
    text: str
    var_digest: Mapping[str, str]


def _value_digest(value: str) -> str:
    return hashlib.sha256(value.encode("utf-8")).hexdigest()[:16]


def _scan_placeholders(body: str) -> set[str]:
    found = set()
    for match in _TOKEN.finditer(body):
        token = match.group(0)
        if token in ("{{", "}}"):
            continue
        if match.group(1) is None:
            raise TemplateError(f"stray brace at offset {match.start()}")
        found.add(match.group(1))
    return found


class PromptCatalog:
    """All six templates, loaded once and reused for the process lifetime."""

    def __init__(self, templates: Mapping[str, PromptTemplate]):
        missing = [tid for tid in TEMPLATE_IDS if tid not in templates]
        if missing:
            raise TemplateError(f"missing templates: {', '.join(missing)}")
        self._templates = dict(templates)

    def get(self, template_id: str) -> PromptTemplate:
        try:
            return self._templates[template_id]
        except KeyError:
            raise TemplateError(f"unknown template {template_id!r}") from None

    def entries(self) -> list[tuple[str, str, frozenset[str]]]:
        """Catalog rows: (template_id, role_name, required_vars)."""
        return [
            (tid, self._templates[tid].role_name, self._templates[tid].required_vars)
            for tid in TEMPLATE_IDS
        ]

    def render(self, template_id: str, variables: Mapping[str, str]) -> RenderedPrompt:
        template = self.get(template_id)
        extra = set(variables) - template.required_vars
        if extra:
            raise TemplateError(f"unexpected variable {sorted(extra)[0]!r} for {template_id}")
        out: list[str] = []
        substituted: set[str] = set()
        pos = 0
        body = template.body
        for match in _TOKEN.finditer(body):
            out.append(body[pos:match.start()])
            pos = match.end()
            token = match.group(0)
            if token == "{{":
                out.append("{")
            elif token == "}}":
                out.append("}")
            else:
                name = match.group(1)
                if name is None:
                    raise TemplateError(f"stray brace in template {template_id}")
                if name not in variables:
                    raise TemplateError(f"missing variable {name!r} for {template_id}")
                value = variables[name]
                if not isinstance(value, str):
                    raise TemplateError(f"variable {name!r} must be a string")
                out.append(value)
                substituted.add(name)
        out.append(body[pos:])
        unused = template.required_vars - substituted
        if unused:
            raise TemplateError(f"missing variable {sorted(unused)[0]!r} for {template_id}")
        digest = {name: _value_digest(variables[name]) for name in template.required_vars}
        return RenderedPrompt(template_id=template_id, text="".join(out), var_digest=digest)


def _read_template(template_id: str, directory: Path | None) -> str:
    if directory is not None:
        path = directory / template_id
        if not path.is_file():
            raise TemplateError(f"template file not found: {path}")
        return path.read_text(encoding="utf-8")
    return (resources.files(__package__) / "prompts" / template_id).read_text(encoding="utf-8")


def load_catalog(directory: Path | str | None = None) -> PromptCatalog:
    """Load all templates from ``directory`` (default: the packaged set).

    Load-time validation guarantees that every placeholder in a body is a
    declared variable and every declared variable actually appears.
    """
    directory = Path(directory) if directory is not None else None
    templates = {}
    for template_id in TEMPLATE_IDS:
        body = _read_template(template_id, directory)
        placeholders = _scan_placeholders(body)
        required = REQUIRED_VARS[template_id]
        if placeholders != required:
            raise TemplateError(
                f"template {template_id} placeholders {sorted(placeholders)} "
                f"do not match required variables {sorted(required)}"
            )
        templates[template_id] = PromptTemplate(
            template_id=template_id,
            role_name=ROLE_NAMES[template_id],
            body=body,
            required_vars=required,
        )
    return PromptCatalog(templates)
