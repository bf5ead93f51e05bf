"""Prompt assembly for generation, baseline, and correction turns.

The system prompt and the baseline additions are shipped as checksum-pinned
assets; assembly never edits them beyond expanding the three placeholders of
the baseline template. All builders are deterministic for fixed inputs, so
prompt snapshots can be golden-file tested byte for byte.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass
from importlib.resources import files
from typing import Optional, Sequence

from .errors import ConformingReport, OntologxError
from .model import LogEvent, graph_to_json
from .ontology import OntologySchema, relationship_triples
from .retrieval import ExampleRecord
from .validation import ValidationReport

__all__ = [
    "Role",
    "PromptMessage",
    "load_system_prompt",
    "load_baseline_template",
    "load_graph_schema",
    "build_generation_prompt",
    "build_baseline_prompt",
    "build_correction_prompt",
    "build_parse_retry_prompt",
    "SYSTEM_PROMPT_SHA256",
    "BASELINE_ADDITIONS_SHA256",
]

SYSTEM_PROMPT_SHA256 = "56bdd2080bf9958e7ff0b8c34b55d1d8a36d7917d593af66f932f6dcba99e3ca"
BASELINE_ADDITIONS_SHA256 = "b95ef383276f29344ee770edad8f04c8e7a2c1c2ae7aa74b16e6adf34bb8943e"


class Role(enum.Enum):
    SYSTEM = "system"
    USER = "user"
    ASSISTANT = "assistant"


@dataclass(frozen=True)
class PromptMessage:
    role: Role
    content: str

    def __post_init__(self):
        if not self.content:
            raise ValueError("prompt message content must be non-empty")

    def to_dict(self) -> dict:
        return {"role": self.role.value, "content": self.content}


def _load_asset(name: str, pinned_sha256: str) -> str:
    text = files("ontologx").joinpath("assets", name).read_text(encoding="utf-8")
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    if digest != pinned_sha256:
        raise OntologxError(
            f"prompt asset {name} fails its integrity check "
            f"(expected {pinned_sha256}, got {digest})"
        )
    return text


def load_system_prompt() -> str:
    return _load_asset("system_prompt.md", SYSTEM_PROMPT_SHA256)


def load_baseline_template() -> str:
    return _load_asset("baseline_additions.md", BASELINE_ADDITIONS_SHA256)


def load_graph_schema() -> dict:
    """The canonical graph JSON schema, also used as the structured-output
    contract handed to backends."""
    text = files("ontologx").joinpath("assets", "graph_schema.json").read_text(
        encoding="utf-8"
    )
    return json.loads(text)


def render_event(event: LogEvent) -> str:
    lines = [f"Log event: {event.raw_text}"]
    if event.context:
        lines.append(f"Context: {event.context}")
    return "\n".join(lines)


def _render_example_input(record: ExampleRecord) -> str:
    lines = [f"Log event: {record.log_text}"]
    if record.context:
        lines.append(f"Context: {record.context}")
    return "\n".join(lines)


def build_generation_prompt(
    event: LogEvent,
    examples: Sequence[ExampleRecord],
    schema: OntologySchema,
) -> list[PromptMessage]:
    """System prompt, one user/assistant pair per retrieved example, then the
    event itself. The ontology reaches the model through the examples and the
    structured-output contract, not through extra prose."""
    messages = [PromptMessage(Role.SYSTEM, load_system_prompt())]
    for record in examples:
        messages.append(PromptMessage(Role.USER, _render_example_input(record)))
        messages.append(PromptMessage(Role.ASSISTANT, graph_to_json(record.graph, indent=2)))
    messages.append(PromptMessage(Role.USER, render_event(event)))
    return messages


def _properties_schema_rendering(schema: OntologySchema) -> str:
    return json.dumps(
        {c.name: c.allowed_keys() for c in schema.classes},
        ensure_ascii=False,
        separators=(", ", ": "),
    )


def _triples_rendering(schema: OntologySchema) -> str:
    return ", ".join(f"({s}, {r}, {t})" for s, r, t in relationship_triples(schema))


def build_baseline_prompt(
    event: LogEvent, schema: OntologySchema
) -> list[PromptMessage]:
    """Prompt-only variant: the system prompt plus the output-format
    additions, with the three placeholders expanded from the schema. No
    few-shot examples, no structured-output contract; the reply is expected
    as plain-text JSON."""
    additions = load_baseline_template()
    additions = additions.replace(
        "{{json output format}}",
        json.dumps(load_graph_schema(), ensure_ascii=False, separators=(", ", ": ")),
    )
    additions = additions.replace(
        "{{properties schema}}", _properties_schema_rendering(schema)
    )
    additions = additions.replace("{{triples}}", _triples_rendering(schema))
    system = load_system_prompt() + additions
    return [
        PromptMessage(Role.SYSTEM, system),
        PromptMessage(Role.USER, render_event(event)),
    ]


def build_correction_prompt(
    report: ValidationReport, prior: Sequence[PromptMessage]
) -> list[PromptMessage]:
    """Extend the conversation with one user turn enumerating every
    violation and asking for the full corrected graph."""
    if report.conforms:
        raise ConformingReport("the report has no violations to correct")
    lines = [
        "The generated knowledge graph is not valid. Fix the following "
        "issues and return the corrected graph in the same JSON format:"
    ]
    for i, v in enumerate(report.violations, start=1):
        lines.append(f"{i}. [{v.code.value}] {v.subject}: {v.message}")
    lines.append("Return the complete corrected graph, not only the changed parts.")
    return list(prior) + [PromptMessage(Role.USER, "\n".join(lines))]


def build_parse_retry_prompt(
    parse_errors: Sequence[str], prior: Sequence[PromptMessage]
) -> list[PromptMessage]:
    """Extend the conversation with one user turn when the reply did not even
    parse against the canonical graph schema."""
    lines = [
        "The previous output could not be parsed as a knowledge graph in "
        "the required JSON format. Problems:"
    ]
    for i, err in enumerate(parse_errors, start=1):
        lines.append(f"{i}. {err}")
    lines.append("Return the full graph again as a single JSON object in the required format.")
    return list(prior) + [PromptMessage(Role.USER, "\n".join(lines))]
