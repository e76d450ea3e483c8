"""assigncraft: a gateway that personalizes or simplifies academic
assignments through an LLM pipeline with guardrails, multi-provider
failover, and persistent generation records."""

from .domain import (
    AllProvidersFailed,
    AssignmentSource,
    Deadline,
    DeadlineExceeded,
    DocumentSource,
    GeneratedAssignment,
    GenerationRecord,
    InvalidAssignment,
    InvalidInterest,
    InvalidRequest,
    LengthReport,
    MalformedModelOutput,
    MediaKind,
    PersonalizationRequest,
    PipelineError,
    ServiceError,
    StorageFailure,
    TaskKind,
    TextSource,
    UnsafeOutput,
)
from .pipeline import Pipeline, parse_event
from .router import (
    CompletionRequest,
    CompletionResponse,
    ProviderProfile,
    Router,
    ScriptEntry,
    ScriptedProvider,
)

__version__ = "0.1.0"
