"""Per-event orchestration: retrieve, generate, validate, correct, persist.

One event flows through at most ``1 + max_correction_rounds`` backend calls.
A reply that fails to parse or fails validation triggers a correction turn
appended to the same conversation (the model's reply is echoed back as an
assistant message, then one user message enumerates the problems). When the
rounds are exhausted the outcome falls back to the empty graph, which is
recorded but never persisted. Baseline mode runs a single prompt-only
generation with no retrieval and no correction; its validation result is
recorded for metrics only.

Streams are strictly sequential — event ``i + 1`` starts only after event
``i``'s outcome is final — which is what makes a scripted backend replay
byte-reproducible. Failed or unpersisted outcomes go to a dead-letter
JSON-lines file for audit; wall-clock timings stay out of that file so
replays stay byte-identical.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Optional, Union

import numpy as np

from .backend import BackendResponse, GenerationConfig, Mode, generate
from .embedding import Embedder, Embedding, HashingEmbedder
from .errors import DuplicateId, EmptyInput, StorageFailure, StoreUnavailable
from .model import (
    EMPTY_GRAPH,
    Attempt,
    KnowledgeGraph,
    LogEvent,
    OutcomeStatus,
    PipelineOutcome,
)
from .ontology import OntologySchema, default_schema
from .prompts import (
    PromptMessage,
    Role,
    build_baseline_prompt,
    build_correction_prompt,
    build_generation_prompt,
    build_parse_retry_prompt,
)
from .retrieval import ExampleIndex, ExampleOrigin, MMRConfig, make_example, retrieve_examples
from .store import GraphStore, StoredGraph
from .validation import ValidationReport, validate

__all__ = ["PipelineConfig", "RunSummary", "process_event", "run_stream", "summarize"]


@dataclass
class PipelineConfig:
    generation: GenerationConfig = field(default_factory=GenerationConfig)
    mmr: MMRConfig = field(default_factory=MMRConfig)
    schema: OntologySchema = field(default_factory=default_schema)
    store: Optional[GraphStore] = None
    index: Optional[ExampleIndex] = None
    embedder: Embedder = field(default_factory=HashingEmbedder)
    run_id: str = "run"
    clock: Callable[[], float] = time.time
    add_generated_to_index: bool = False
    dead_letter_path: Optional[Union[str, Path]] = None


def _embed_or_zero(embedder: Embedder, text: str) -> Embedding:
    # token-free lines cannot be embedded; store a zero vector rather than
    # refusing to persist an otherwise valid graph
    try:
        return embedder.embed(text)
    except EmptyInput:
        return Embedding(np.zeros(embedder.dim))


def _created_at(clock: Callable[[], float]) -> str:
    return datetime.fromtimestamp(clock(), tz=timezone.utc).isoformat()


def _persist(
    event: LogEvent,
    graph: KnowledgeGraph,
    query_embedding: Optional[Embedding],
    cfg: PipelineConfig,
) -> tuple[bool, Optional[str]]:
    if cfg.store is None:
        return False, None
    embedding = (
        query_embedding
        if query_embedding is not None
        else _embed_or_zero(cfg.embedder, event.embedding_text())
    )
    record = StoredGraph(
        graph_id=f"{cfg.run_id}:{event.sequence_no:06d}",
        graph=graph,
        source_log=event.raw_text,
        context=event.context,
        embedding=embedding,
        created_at=_created_at(cfg.clock),
        pipeline_run_id=cfg.run_id,
    )
    try:
        cfg.store.put(record)
    except (StorageFailure, DuplicateId) as exc:
        return False, str(StoreUnavailable(f"persist failed: {exc}"))
    return True, None


def process_event(event: LogEvent, cfg: PipelineConfig) -> PipelineOutcome:
    """Run one event through the full loop and return its outcome.

    Persist failures after a valid generation do not raise; the outcome
    comes back flagged unpersisted with the error recorded.
    """
    start = time.perf_counter()
    if cfg.generation.mode is Mode.BASELINE:
        outcome = _process_baseline(event, cfg)
    else:
        outcome = _process_agent(event, cfg)
    wall_ms = (time.perf_counter() - start) * 1000.0
    return PipelineOutcome(
        event=outcome.event,
        graph=outcome.graph,
        status=outcome.status,
        correction_rounds=outcome.correction_rounds,
        trace=outcome.trace,
        persisted=outcome.persisted,
        persist_error=outcome.persist_error,
        wall_ms=wall_ms,
    )


def _process_agent(event: LogEvent, cfg: PipelineConfig) -> PipelineOutcome:
    query: Optional[Embedding] = None
    examples = []
    if cfg.index is not None and len(cfg.index) > 0:
        try:
            query = cfg.embedder.embed(event.embedding_text())
            examples = retrieve_examples(cfg.index, query, cfg.mmr)
        except EmptyInput:
            examples = []

    messages = build_generation_prompt(event, examples, cfg.schema)
    max_rounds = cfg.generation.max_correction_rounds
    attempts: list[Attempt] = []

    for attempt_no in range(1 + max_rounds):
        response: BackendResponse = generate(messages, cfg.generation)
        if response.parsed is None:
            attempts.append(
                Attempt(tuple(messages), response.raw_text, None, tuple(response.parse_errors))
            )
            if attempt_no == max_rounds:
                break
            prior = messages + [PromptMessage(Role.ASSISTANT, response.raw_text)]
            messages = build_parse_retry_prompt(response.parse_errors, prior)
            continue

        report = validate(response.parsed, cfg.schema, raw_event_text=event.raw_text)
        attempts.append(Attempt(tuple(messages), response.raw_text, report, ()))
        if report.conforms:
            persisted, persist_error = _persist(event, response.parsed, query, cfg)
            if (
                persisted
                and cfg.add_generated_to_index
                and cfg.index is not None
            ):
                cfg.index.add_example(
                    make_example(
                        event.raw_text,
                        event.context,
                        response.parsed,
                        cfg.embedder,
                        origin=ExampleOrigin.GENERATED,
                    )
                )
            status = (
                OutcomeStatus.VALID_FIRST_TRY
                if attempt_no == 0
                else OutcomeStatus.VALID_AFTER_CORRECTION
            )
            return PipelineOutcome(
                event=event,
                graph=response.parsed,
                status=status,
                correction_rounds=attempt_no,
                trace=tuple(attempts),
                persisted=persisted,
                persist_error=persist_error,
            )
        if attempt_no == max_rounds:
            break
        prior = messages + [PromptMessage(Role.ASSISTANT, response.raw_text)]
        messages = build_correction_prompt(report, prior)

    return PipelineOutcome(
        event=event,
        graph=EMPTY_GRAPH,
        status=OutcomeStatus.FAILED_EMPTY,
        correction_rounds=max_rounds,
        trace=tuple(attempts),
    )


def _process_baseline(event: LogEvent, cfg: PipelineConfig) -> PipelineOutcome:
    messages = build_baseline_prompt(event, cfg.schema)
    response = generate(messages, cfg.generation)
    if response.parsed is None:
        attempt = Attempt(
            tuple(messages), response.raw_text, None, tuple(response.parse_errors)
        )
        return PipelineOutcome(
            event=event,
            graph=EMPTY_GRAPH,
            status=OutcomeStatus.FAILED_EMPTY,
            correction_rounds=0,
            trace=(attempt,),
        )
    report = validate(response.parsed, cfg.schema, raw_event_text=event.raw_text)
    attempt = Attempt(tuple(messages), response.raw_text, report, ())
    persisted, persist_error = (False, None)
    if report.conforms:
        persisted, persist_error = _persist(event, response.parsed, None, cfg)
    return PipelineOutcome(
        event=event,
        graph=response.parsed,
        status=OutcomeStatus.VALID_FIRST_TRY,
        correction_rounds=0,
        trace=(attempt,),
        persisted=persisted,
        persist_error=persist_error,
    )


def _final_report(outcome: PipelineOutcome) -> Optional[ValidationReport]:
    for attempt in reversed(outcome.trace):
        if attempt.report is not None:
            return attempt.report
    return None


def _needs_dead_letter(outcome: PipelineOutcome) -> bool:
    if outcome.status is OutcomeStatus.FAILED_EMPTY:
        return True
    if outcome.persist_error is not None:
        return True
    report = _final_report(outcome)
    return report is not None and not report.conforms


def _outcome_to_dict(outcome: PipelineOutcome) -> dict:
    # wall-clock intentionally omitted: dead-letter files must replay
    # byte-identically
    from .model import graph_to_dict

    return {
        "sequence_no": outcome.event.sequence_no,
        "raw_text": outcome.event.raw_text,
        "context": outcome.event.context,
        "source_file": outcome.event.source_file,
        "status": outcome.status.value,
        "correction_rounds": outcome.correction_rounds,
        "persisted": outcome.persisted,
        "persist_error": outcome.persist_error,
        "graph": graph_to_dict(outcome.graph),
        "trace": [
            {
                "prompt": [m.to_dict() for m in attempt.prompt],
                "raw_response": attempt.raw_response,
                "parse_errors": list(attempt.parse_errors),
                "report": attempt.report.to_dict() if attempt.report else None,
            }
            for attempt in outcome.trace
        ],
    }


@dataclass(frozen=True)
class RunSummary:
    events: int
    by_status: dict
    mean_correction_rounds: float
    persisted: int
    dead_lettered: int
    total_wall_ms: float
    mean_wall_ms: float

    def to_dict(self) -> dict:
        return {
            "events": self.events,
            "by_status": dict(self.by_status),
            "mean_correction_rounds": self.mean_correction_rounds,
            "persisted": self.persisted,
            "dead_lettered": self.dead_lettered,
            "total_wall_ms": self.total_wall_ms,
            "mean_wall_ms": self.mean_wall_ms,
        }


def summarize(outcomes: list[PipelineOutcome]) -> RunSummary:
    by_status = {status.value: 0 for status in OutcomeStatus}
    for outcome in outcomes:
        by_status[outcome.status.value] += 1
    n = len(outcomes)
    total_ms = sum(o.wall_ms for o in outcomes)
    return RunSummary(
        events=n,
        by_status=by_status,
        mean_correction_rounds=(
            sum(o.correction_rounds for o in outcomes) / n if n else 0.0
        ),
        persisted=sum(1 for o in outcomes if o.persisted),
        dead_lettered=sum(1 for o in outcomes if _needs_dead_letter(o)),
        total_wall_ms=total_ms,
        mean_wall_ms=total_ms / n if n else 0.0,
    )


def run_stream(
    events: Iterable[LogEvent], cfg: PipelineConfig
) -> list[PipelineOutcome]:
    """Process events strictly in order; per-event failures are recorded and
    never abort the stream. Dead-letter records are appended as the stream
    progresses when ``cfg.dead_letter_path`` is set."""
    outcomes: list[PipelineOutcome] = []
    dead_fh = None
    if cfg.dead_letter_path is not None:
        dead_fh = open(cfg.dead_letter_path, "a", encoding="utf-8")
    try:
        for event in events:
            outcome = process_event(event, cfg)
            outcomes.append(outcome)
            if dead_fh is not None and _needs_dead_letter(outcome):
                dead_fh.write(
                    json.dumps(
                        _outcome_to_dict(outcome), ensure_ascii=False, separators=(",", ":")
                    )
                    + "\n"
                )
                dead_fh.flush()
    finally:
        if dead_fh is not None:
            dead_fh.close()
    return outcomes
