from __future__ import annotations

import json

import pytest

from assigncraft import templates
from assigncraft.guardrails import Guardrails
from assigncraft.pipeline import Pipeline
from assigncraft.router import Router, ScriptEntry
from assigncraft.storage import FileStore, RecordStore

ACCEPT = '{"decision": "accepted", "explanation": ""}'


def reject(explanation: str) -> str:
    return json.dumps({"decision": "rejected", "explanation": explanation})


def main_response(title: str, content: str, prompt_tokens: int = 0, completion_tokens: int = 0) -> ScriptEntry:
    text = json.dumps({"assignment_title": title, "assignment_content": content})
    return ScriptEntry.ok(text, prompt_tokens=prompt_tokens, completion_tokens=completion_tokens)


@pytest.fixture(scope="session")
def catalog():
    return templates.load_catalog()


@pytest.fixture
def stores(tmp_path):
    return RecordStore(tmp_path, durable=False), FileStore(tmp_path)


class PipelineHarness:
    """One pipeline over one scripted provider, with the script exposed."""

    def __init__(self, catalog, tmp_path, script=(), responder=None):
        self.router = Router()
        self.provider = self.router.register_scripted_provider(list(script), responder=responder)
        self.records = RecordStore(tmp_path / "data", durable=False)
        self.files = FileStore(tmp_path / "data")
        self.guardrails = Guardrails(self.router, catalog)
        self.pipeline = Pipeline(
            self.router, catalog, self.guardrails, self.records, self.files
        )


@pytest.fixture
def harness_factory(catalog, tmp_path):
    counter = [0]

    def build(script=(), responder=None) -> PipelineHarness:
        counter[0] += 1
        return PipelineHarness(catalog, tmp_path / str(counter[0]), script=script, responder=responder)

    return build
