"""A deterministic stand-in model for demos and load tests.

``demo_responder`` answers every pipeline prompt from the prompt's own
content: guardrail prompts get an acceptance verdict, generation prompts
get a small personalized document built from the submitted assignment and
interest, and page-conversion prompts echo the page. Since each response is
derived from its request, concurrent runs stay per-request-correct without
any live model.
"""

from __future__ import annotations

import json

from . import templates
from .router import CompletionRequest

_ACCEPT = '{"decision": "accepted", "explanation": ""}'


def _between(text: str, start: str, end: str) -> str:
    head = text.find(start)
    if head < 0:
        return ""
    head += len(start)
    tail = text.find(end, head)
    return text[head:tail] if tail >= 0 else text[head:]


def extract_prompt_variables(request: CompletionRequest) -> dict[str, str]:
    """Recover the substituted variables from a rendered pipeline prompt."""
    prompt = request.prompt
    if request.tag == templates.INTEREST_GUARDRAILS:
        return {"interest": _between(prompt, "**Student Interest**: ", "\n\n### Acceptance Criteria")}
    if request.tag == templates.ASSIGNMENT_GUARDRAILS:
        return {"assignment": _between(prompt, "**Assignment**: ", "\n\n### Acceptance Criteria")}
    if request.tag == templates.OUTPUT_GUARDRAILS:
        return {"content": _between(prompt, "**Generated Assignment Content**: ", "\n\n### Acceptance Criteria")}
    if request.tag == templates.PDF_OCR:
        return {"page_text": _between(prompt, "**PDF Page Content**: ", "\n\n### Context and Constraints")}
    if request.tag == templates.PERSONALIZE_ASSIGNMENT:
        return {
            "general_assignment": _between(
                prompt, "1. **General Assignment (to be personalized)**: ", "\n\n2. **Student Interest**: "
            ),
            "interest": _between(prompt, "2. **Student Interest**: ", "\n\n### Output Requirements"),
        }
    if request.tag == templates.SIMPLIFY_ASSIGNMENT:
        return {
            "assignment": _between(
                prompt, "Given the following assignment text: ", ", rewrite it to match a simplified reading level."
            ),
            "interest": _between(prompt, "student's stated interest: ", ", where appropriate"),
        }
    return {}


def demo_responder(request: CompletionRequest) -> str:
    variables = extract_prompt_variables(request)
    if request.tag in (
        templates.INTEREST_GUARDRAILS,
        templates.ASSIGNMENT_GUARDRAILS,
        templates.OUTPUT_GUARDRAILS,
    ):
        return _ACCEPT
    if request.tag == templates.PDF_OCR:
        return variables.get("page_text", "")
    interest = variables.get("interest", "your interest")
    assignment = variables.get("general_assignment") or variables.get("assignment") or ""
    if request.tag == templates.SIMPLIFY_ASSIGNMENT:
        title = f"{interest.title()} Made Simple ✏️"
        content = (
            f"### A Simpler Look\n\nHere is the task in plain words, with a nod to {interest}:\n\n"
            f"{assignment}"
        )
    else:
        title = f"{interest.title()} Edition ✨"
        content = (
            f"### Warm-Up\n\nPicture this task through the lens of {interest}.\n\n"
            f"### The Task\n\n{assignment}\n\n### Wrap-Up\n\nExplain how your answer would look to a fan of {interest}."
        )
    return json.dumps({"assignment_title": title, "assignment_content": content})
