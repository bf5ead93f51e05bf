"""Triple-level scoring of generated graphs against gold annotations.

Graphs are flattened into canonical triples: node identity is the class
name plus a digest of the node's sorted property pairs, so two nodes with
the same type and properties merge regardless of their graph-local ids.
Matching is exact string equality after normalisation (trim and Unicode
NFC) — the strictest reproducible reading, documented as such.

Precision is the fraction of generated triples found in the gold set,
recall the fraction of gold triples generated, F1 their harmonic mean
(zero when the intersection is empty). Corpus aggregation macro-averages
over events; spread across repeated runs is reported as the population
standard deviation.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import unicodedata
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

from .errors import EmptyInput
from .model import GraphNode, KnowledgeGraph
from .validation import ValidationReport

__all__ = [
    "CanonicalTriple",
    "canonical_node_key",
    "canonical_triples",
    "precision_recall_f1",
    "EventScore",
    "MetricsReport",
    "aggregate",
    "RunsSummary",
    "summarize_runs",
]


class CanonicalTriple(NamedTuple):
    subject: str
    predicate: str
    object: str


def _norm(text: str) -> str:
    return unicodedata.normalize("NFC", text).strip()


def canonical_node_key(node: GraphNode) -> str:
    """Class name plus a digest of the normalised, sorted property pairs."""
    pairs = sorted((_norm(p.key), _norm(p.value)) for p in node.properties)
    blob = "\x1f".join(f"{k}\x1e{v}" for k, v in pairs)
    digest = hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]
    return f"{_norm(node.node_type)}#{digest}"


def canonical_triples(g: KnowledgeGraph) -> set[CanonicalTriple]:
    """One triple per data property and per relationship; the empty graph
    yields the empty set."""
    keys = {}
    for node in g.nodes:
        keys.setdefault(node.id, canonical_node_key(node))
    triples: set[CanonicalTriple] = set()
    for node in g.nodes:
        subject = keys[node.id]
        for prop in node.properties:
            triples.add(CanonicalTriple(subject, _norm(prop.key), _norm(prop.value)))
    for rel in g.relationships:
        if rel.source_id in keys and rel.target_id in keys:
            triples.add(
                CanonicalTriple(keys[rel.source_id], _norm(rel.rel_type), keys[rel.target_id])
            )
    return triples


def precision_recall_f1(
    generated: KnowledgeGraph, gold: KnowledgeGraph
) -> tuple[float, float, float]:
    """Triple-overlap scores; an empty generated graph scores (0, 0, 0)."""
    gen = canonical_triples(generated)
    ref = canonical_triples(gold)
    hit = len(gen & ref)
    precision = hit / len(gen) if gen else 0.0
    recall = hit / len(ref) if ref else 0.0
    f1 = (
        2.0 * precision * recall / (precision + recall)
        if precision + recall > 0
        else 0.0
    )
    return precision, recall, f1


@dataclass(frozen=True)
class EventScore:
    label: str
    precision: float
    recall: float
    f1: float
    conforms: Optional[bool] = None

    def to_dict(self) -> dict:
        out = {
            "event": self.label,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }
        if self.conforms is not None:
            out["conforms"] = self.conforms
        return out


@dataclass(frozen=True)
class MetricsReport:
    """Macro-averaged corpus metrics for one run.

    ``judge_score`` is reserved for an externally computed LLM-judge score;
    nothing in this package fills it.
    """

    precision: float
    recall: float
    f1: float
    shacl_violation_rate: float
    per_event: tuple[EventScore, ...] = ()
    judge_score: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "shacl_violation_rate": self.shacl_violation_rate,
            "judge_score": self.judge_score,
            "per_event": [e.to_dict() for e in self.per_event],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2) + "\n"


def aggregate(
    scores: Sequence[EventScore],
    validation_reports: Sequence[ValidationReport] = (),
) -> MetricsReport:
    """Macro-average event scores into one report. The violation rate comes
    from the validator reports when given, else 0.0."""
    if not scores:
        raise EmptyInput("aggregate requires at least one event score")
    n = len(scores)
    rate = 0.0
    if validation_reports:
        rate = sum(1 for r in validation_reports if not r.conforms) / len(
            validation_reports
        )
    return MetricsReport(
        precision=sum(s.precision for s in scores) / n,
        recall=sum(s.recall for s in scores) / n,
        f1=sum(s.f1 for s in scores) / n,
        shacl_violation_rate=rate,
        per_event=tuple(scores),
    )


_METRIC_FIELDS = ("precision", "recall", "f1", "shacl_violation_rate")


@dataclass(frozen=True)
class RunsSummary:
    """Mean and population standard deviation of each metric over runs."""

    n_runs: int
    mean: dict = field(default_factory=dict)
    sd: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"n_runs": self.n_runs, "mean": dict(self.mean), "sd": dict(self.sd)}

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        header = ["n_runs"]
        row = [str(self.n_runs)]
        for name in _METRIC_FIELDS:
            header += [f"{name}_mean", f"{name}_sd"]
            row += [f"{self.mean[name]:.6f}", f"{self.sd[name]:.6f}"]
        writer.writerow(header)
        writer.writerow(row)
        return buf.getvalue()


def summarize_runs(runs: Sequence[MetricsReport]) -> RunsSummary:
    if not runs:
        raise EmptyInput("summarize_runs requires at least one run")
    mean: dict = {}
    sd: dict = {}
    for name in _METRIC_FIELDS:
        values = [getattr(r, name) for r in runs]
        m = sum(values) / len(values)
        mean[name] = m
        sd[name] = math.sqrt(sum((v - m) ** 2 for v in values) / len(values))
    return RunsSummary(n_runs=len(runs), mean=mean, sd=sd)
