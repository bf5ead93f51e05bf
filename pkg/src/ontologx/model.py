"""Core data model: log events, property graphs, and pipeline outcomes.

All values here are immutable after construction and safe to share across
threads. Property and node order is preserved everywhere so that prompt
snapshots and serialisation round-trips stay deterministic.

The canonical JSON wire format (also handed to the LLM as its structured
output schema) is::

    {"nodes": [{"id": ..., "type": ..., "properties": [{"type": ..., "value": ...}]}],
     "relationships": [{"source_id": ..., "target_id": ..., "type": ...}]}

Note the deliberate nesting: a node's ``"type"`` is its ontology class name
while a property's ``"type"`` is the data-property name.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional, Sequence

from .errors import ParseError

__all__ = [
    "LogEvent",
    "NodeProperty",
    "GraphNode",
    "GraphRelationship",
    "KnowledgeGraph",
    "EMPTY_GRAPH",
    "OutcomeStatus",
    "Attempt",
    "PipelineOutcome",
    "StructuralError",
    "graph_is_empty",
    "structural_check",
    "graph_to_dict",
    "graph_from_dict",
    "graph_to_json",
    "graph_from_json",
    "parse_graph_payload",
]


@dataclass(frozen=True)
class LogEvent:
    """One raw log line plus optional provenance.

    ``raw_text`` must be non-empty after trimming; ``sequence_no`` is the
    ingestion order and must be unique within one run.
    """

    raw_text: str
    context: Optional[str] = None
    source_file: Optional[str] = None
    sequence_no: int = 0

    def __post_init__(self):
        if not self.raw_text.strip():
            raise ValueError("LogEvent.raw_text must be non-empty after trimming")
        if self.sequence_no < 0:
            raise ValueError("LogEvent.sequence_no must be non-negative")

    def embedding_text(self) -> str:
        """Text fed to the embedder: raw line, plus context when present."""
        if self.context:
            return f"{self.raw_text}\n{self.context}"
        return self.raw_text


@dataclass(frozen=True)
class NodeProperty:
    """A (data-property name, scalar value) pair on a node.

    Values stay strings even for numeric or temporal content; typed
    interpretation is the consumer's job.
    """

    key: str
    value: str


@dataclass(frozen=True)
class GraphNode:
    id: str
    node_type: str
    properties: tuple[NodeProperty, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "properties", tuple(self.properties))

    def property_values(self, key: str) -> list[str]:
        return [p.value for p in self.properties if p.key == key]


@dataclass(frozen=True)
class GraphRelationship:
    source_id: str
    target_id: str
    rel_type: str

    def triple(self) -> tuple[str, str, str]:
        return (self.source_id, self.rel_type, self.target_id)

    def label(self) -> str:
        return f"{self.source_id}-[{self.rel_type}]->{self.target_id}"


@dataclass(frozen=True)
class KnowledgeGraph:
    """A typed property graph; the unit of extraction.

    The empty graph (zero nodes, zero relationships) is a legal value and
    represents extraction failure.
    """

    nodes: tuple[GraphNode, ...] = ()
    relationships: tuple[GraphRelationship, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "relationships", tuple(self.relationships))

    def node_ids(self) -> list[str]:
        return [n.id for n in self.nodes]

    def find_node(self, node_id: str) -> Optional[GraphNode]:
        """First node carrying ``node_id`` (duplicates are a structural defect)."""
        for n in self.nodes:
            if n.id == node_id:
                return n
        return None


EMPTY_GRAPH = KnowledgeGraph()


class OutcomeStatus(enum.Enum):
    VALID_FIRST_TRY = "VALID_FIRST_TRY"
    VALID_AFTER_CORRECTION = "VALID_AFTER_CORRECTION"
    FAILED_EMPTY = "FAILED_EMPTY"


@dataclass(frozen=True)
class Attempt:
    """One generation attempt: the messages sent, the raw reply, and how it
    was judged. ``report`` is a ``validation.ValidationReport`` when the reply
    parsed, else ``None`` with the parse errors listed."""

    prompt: tuple  # tuple of prompts.PromptMessage
    raw_response: str
    report: Optional[Any]
    parse_errors: tuple[str, ...] = ()


@dataclass(frozen=True)
class PipelineOutcome:
    event: LogEvent
    graph: KnowledgeGraph
    status: OutcomeStatus
    correction_rounds: int
    trace: tuple[Attempt, ...] = ()
    persisted: bool = False
    persist_error: Optional[str] = None
    wall_ms: float = 0.0  # in-memory diagnostic; never serialised

    def __post_init__(self):
        if (self.status is OutcomeStatus.FAILED_EMPTY) != graph_is_empty(self.graph):
            raise ValueError("status FAILED_EMPTY must coincide with an empty graph")
        if self.correction_rounds < 0:
            raise ValueError("correction_rounds must be non-negative")


# -- structural well-formedness ------------------------------------------------


@dataclass(frozen=True)
class StructuralError:
    kind: str  # DanglingEndpoint | DuplicateNodeId | DuplicatePropertyKey
    subject: str
    message: str


def graph_is_empty(g: KnowledgeGraph) -> bool:
    """True iff the graph has zero nodes and zero relationships."""
    return not g.nodes and not g.relationships


def structural_check(g: KnowledgeGraph) -> list[StructuralError]:
    """Check the three structural invariants of a graph.

    Returns one error per dangling relationship endpoint, per node id that
    occurs more than once, and per duplicated property key within a node.
    An empty list means the graph is structurally well-formed.
    """
    errors: list[StructuralError] = []

    seen: dict[str, int] = {}
    for n in g.nodes:
        seen[n.id] = seen.get(n.id, 0) + 1
    for node_id in sorted(k for k, count in seen.items() if count > 1):
        errors.append(
            StructuralError(
                "DuplicateNodeId", node_id, f"node id {node_id!r} occurs more than once"
            )
        )

    for n in g.nodes:
        keys_seen: set[str] = set()
        duplicated: list[str] = []
        for p in n.properties:
            if p.key in keys_seen and p.key not in duplicated:
                duplicated.append(p.key)
            keys_seen.add(p.key)
        for key in duplicated:
            errors.append(
                StructuralError(
                    "DuplicatePropertyKey",
                    n.id,
                    f"node {n.id!r} repeats property key {key!r}",
                )
            )

    ids = set(seen)
    for r in g.relationships:
        for endpoint in (r.source_id, r.target_id):
            if endpoint not in ids:
                errors.append(
                    StructuralError(
                        "DanglingEndpoint",
                        endpoint,
                        f"relationship {r.label()} references absent node {endpoint!r}",
                    )
                )
    return errors


# -- canonical JSON rendering --------------------------------------------------


def graph_to_dict(g: KnowledgeGraph) -> dict:
    return {
        "nodes": [
            {
                "id": n.id,
                "type": n.node_type,
                "properties": [{"type": p.key, "value": p.value} for p in n.properties],
            }
            for n in g.nodes
        ],
        "relationships": [
            {"source_id": r.source_id, "target_id": r.target_id, "type": r.rel_type}
            for r in g.relationships
        ],
    }


def graph_to_json(g: KnowledgeGraph, indent: Optional[int] = None) -> str:
    if indent is None:
        return json.dumps(graph_to_dict(g), ensure_ascii=False, separators=(",", ":"))
    return json.dumps(graph_to_dict(g), ensure_ascii=False, indent=indent)


def graph_from_dict(payload: dict) -> KnowledgeGraph:
    """Strict inverse of :func:`graph_to_dict`; raises ``ParseError`` on any
    deviation from the canonical schema."""
    graph, errors = parse_graph_payload(payload)
    if graph is None:
        raise ParseError("; ".join(errors))
    return graph


def graph_from_json(text: str) -> KnowledgeGraph:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    return graph_from_dict(payload)


def _check_str(obj: dict, key: str, where: str, errors: list[str]) -> Optional[str]:
    if key not in obj:
        errors.append(f"missing field: {where}{key}")
        return None
    value = obj[key]
    if not isinstance(value, str):
        errors.append(f"field {where}{key} must be a string")
        return None
    return value


def parse_graph_payload(payload: Any) -> tuple[Optional[KnowledgeGraph], list[str]]:
    """Parse an already-decoded JSON value against the canonical graph schema.

    Returns ``(graph, [])`` on success or ``(None, errors)`` listing every
    deviation found. The check is strict: wrong types, missing fields, and
    unexpected fields are all errors (lenient repair would mask the backend
    behaviour the pipeline is meant to measure).
    """
    errors: list[str] = []
    if not isinstance(payload, dict):
        return None, ["top-level value must be a JSON object"]

    for key in payload:
        if key not in ("nodes", "relationships"):
            errors.append(f"unexpected field: {key}")
    for key in ("nodes", "relationships"):
        if key not in payload:
            errors.append(f"missing field: {key}")
        elif not isinstance(payload[key], list):
            errors.append(f"field {key} must be a list")

    nodes: list[GraphNode] = []
    if isinstance(payload.get("nodes"), list):
        for i, raw in enumerate(payload["nodes"]):
            where = f"nodes[{i}]."
            if not isinstance(raw, dict):
                errors.append(f"nodes[{i}] must be an object")
                continue
            for key in raw:
                if key not in ("id", "type", "properties"):
                    errors.append(f"unexpected field: {where}{key}")
            node_id = _check_str(raw, "id", where, errors)
            node_type = _check_str(raw, "type", where, errors)
            props: list[NodeProperty] = []
            if "properties" not in raw:
                errors.append(f"missing field: {where}properties")
            elif not isinstance(raw["properties"], list):
                errors.append(f"field {where}properties must be a list")
            else:
                for j, rawp in enumerate(raw["properties"]):
                    pwhere = f"{where}properties[{j}]."
                    if not isinstance(rawp, dict):
                        errors.append(f"{where}properties[{j}] must be an object")
                        continue
                    for key in rawp:
                        if key not in ("type", "value"):
                            errors.append(f"unexpected field: {pwhere}{key}")
                    pkey = _check_str(rawp, "type", pwhere, errors)
                    pvalue = _check_str(rawp, "value", pwhere, errors)
                    if pkey is not None and pvalue is not None:
                        props.append(NodeProperty(pkey, pvalue))
            if node_id is not None and node_type is not None:
                nodes.append(GraphNode(node_id, node_type, tuple(props)))

    relationships: list[GraphRelationship] = []
    if isinstance(payload.get("relationships"), list):
        for i, raw in enumerate(payload["relationships"]):
            where = f"relationships[{i}]."
            if not isinstance(raw, dict):
                errors.append(f"relationships[{i}] must be an object")
                continue
            for key in raw:
                if key not in ("source_id", "target_id", "type"):
                    errors.append(f"unexpected field: {where}{key}")
            source = _check_str(raw, "source_id", where, errors)
            target = _check_str(raw, "target_id", where, errors)
            rel_type = _check_str(raw, "type", where, errors)
            if source is not None and target is not None and rel_type is not None:
                relationships.append(GraphRelationship(source, target, rel_type))

    if errors:
        return None, errors
    return KnowledgeGraph(tuple(nodes), tuple(relationships)), []


def events_from_lines(
    lines: Iterable[str],
    source_file: Optional[str] = None,
    context: Optional[str] = None,
    start_sequence: int = 0,
) -> list[LogEvent]:
    """Build events from raw lines, skipping blank ones."""
    events = []
    seq = start_sequence
    for line in lines:
        text = line.rstrip("\n")
        if not text.strip():
            continue
        events.append(
            LogEvent(
                raw_text=text, context=context, source_file=source_file, sequence_no=seq
            )
        )
        seq += 1
    return events
