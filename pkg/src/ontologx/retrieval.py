"""Few-shot example index: exhaustive vector search plus MMR selection.

The index holds (log text, context, graph, embedding) records and scans them
exhaustively; approximate structures are pointless at the scale this runs
at. Selection for prompting is two-stage: fetch the ``fetch_pool`` nearest
records by cosine similarity, then re-rank with maximal marginal relevance
down to ``k``. Records generated by the pipeline itself are only searched
when ``include_generated`` is switched on; the default configuration
retrieves manually curated examples only.
"""

from __future__ import annotations

import enum
import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from . import kernels
from .embedding import Embedder, Embedding
from .errors import DimensionMismatch, ZeroVector
from .model import KnowledgeGraph, graph_from_dict, graph_to_dict, graph_to_json

__all__ = [
    "ExampleOrigin",
    "ExampleRecord",
    "MMRConfig",
    "ExampleIndex",
    "make_example",
    "mmr_select",
    "retrieve_examples",
]


class ExampleOrigin(enum.Enum):
    MANUAL = "MANUAL"
    GENERATED = "GENERATED"


@dataclass(frozen=True, eq=False)
class ExampleRecord:
    log_text: str
    context: Optional[str]
    graph: KnowledgeGraph
    embedding: Embedding
    origin: ExampleOrigin = ExampleOrigin.MANUAL

    def dedupe_key(self) -> tuple:
        return (self.log_text, self.context, graph_to_json(self.graph))

    def embedding_text(self) -> str:
        if self.context:
            return f"{self.log_text}\n{self.context}"
        return self.log_text


@dataclass(frozen=True)
class MMRConfig:
    """Two-stage retrieval parameters.

    ``lambda_weight`` trades relevance (1.0) against diversity (0.0);
    ``fetch_pool`` is the nearest-neighbour pool MMR re-ranks before
    truncating to ``k``.
    """

    lambda_weight: float = 0.5
    k: int = 4
    fetch_pool: int = 20
    include_generated: bool = False

    def __post_init__(self):
        if not 0.0 <= self.lambda_weight <= 1.0:
            raise ValueError("lambda_weight must lie in [0, 1]")
        if self.k <= 0:
            raise ValueError("k must be positive")
        if self.fetch_pool < self.k:
            raise ValueError("fetch_pool must be at least k")


def make_example(
    log_text: str,
    context: Optional[str],
    graph: KnowledgeGraph,
    embedder: Embedder,
    origin: ExampleOrigin = ExampleOrigin.MANUAL,
) -> ExampleRecord:
    """Build a record whose embedding follows the index convention
    (log text plus context when present)."""
    text = f"{log_text}\n{context}" if context else log_text
    return ExampleRecord(
        log_text=log_text,
        context=context,
        graph=graph,
        embedding=embedder.embed(text),
        origin=origin,
    )


def _stack(records: Sequence[ExampleRecord], dim: int) -> np.ndarray:
    matrix = np.empty((len(records), dim), dtype=np.float64)
    for i, r in enumerate(records):
        if r.embedding.dim != dim:
            raise DimensionMismatch(
                f"record embedding dim {r.embedding.dim} differs from {dim}"
            )
        matrix[i] = r.embedding.values
    return matrix


def _normalise_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1)
    if np.any(norms == 0.0):
        raise ZeroVector("index contains a zero embedding")
    return matrix / norms[:, None]


def mmr_select(
    query: Embedding, candidates: Sequence[ExampleRecord], cfg: MMRConfig
) -> list[ExampleRecord]:
    """Greedy maximal-marginal-relevance selection of at most ``cfg.k``
    candidates; ties break by insertion order."""
    if not candidates:
        return []
    matrix = _normalise_rows(_stack(candidates, query.dim))
    qnorm = query.norm()
    if qnorm == 0.0:
        raise ZeroVector("query embedding has zero norm")
    qvec = query.values / qnorm
    query_sims = matrix @ qvec
    pairwise = matrix @ matrix.T
    picks = kernels.mmr_order(query_sims, pairwise, cfg.lambda_weight, cfg.k)
    return [candidates[i] for i in picks]


class ExampleIndex:
    """In-memory vector index over example records.

    Adding is idempotent on the (log text, context, graph) triple; searches
    are exhaustive cosine scans with ties broken by insertion order. Writes
    are serialised by a lock; reads work on immutable snapshots.
    """

    def __init__(self, embedder: Embedder):
        self.embedder = embedder
        self._records: list[ExampleRecord] = []
        self._keys: dict[tuple, int] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._records)

    def records(self) -> tuple[ExampleRecord, ...]:
        return tuple(self._records)

    def add_example(self, record: ExampleRecord) -> int:
        """Insert a record, returning its handle (position). Re-adding an
        identical (log_text, context, graph) triple returns the existing
        handle without growing the index."""
        key = record.dedupe_key()
        with self._lock:
            existing = self._keys.get(key)
            if existing is not None:
                return existing
            handle = len(self._records)
            self._records.append(record)
            self._keys[key] = handle
            return handle

    def add_text_example(
        self,
        log_text: str,
        context: Optional[str],
        graph: KnowledgeGraph,
        origin: ExampleOrigin = ExampleOrigin.MANUAL,
    ) -> int:
        return self.add_example(
            make_example(log_text, context, graph, self.embedder, origin)
        )

    def search_pool(
        self, query: Embedding, n: int, include_generated: bool = False
    ) -> list[ExampleRecord]:
        """Top ``n`` records by cosine similarity to ``query``, descending,
        ties by insertion order."""
        if n < 1:
            raise ValueError("n must be at least 1")
        records = [
            r
            for r in self._records
            if include_generated or r.origin is ExampleOrigin.MANUAL
        ]
        if not records:
            return []
        matrix = _normalise_rows(_stack(records, query.dim))
        qnorm = query.norm()
        if qnorm == 0.0:
            raise ZeroVector("query embedding has zero norm")
        sims = matrix @ (query.values / qnorm)
        order = np.argsort(-sims, kind="stable")
        return [records[i] for i in order[: min(n, len(records))]]

    # -- persistence (JSON-lines, one record per line) ----------------------

    def save(self, path: Union[str, Path]) -> None:
        path = Path(path)
        with path.open("w", encoding="utf-8") as fh:
            for r in self._records:
                fh.write(
                    json.dumps(
                        {
                            "log_text": r.log_text,
                            "context": r.context,
                            "origin": r.origin.value,
                            "graph": graph_to_dict(r.graph),
                            "embedding": r.embedding.tolist(),
                        },
                        ensure_ascii=False,
                        separators=(",", ":"),
                    )
                    + "\n"
                )

    @classmethod
    def load(cls, path: Union[str, Path], embedder: Embedder) -> "ExampleIndex":
        index = cls(embedder)
        path = Path(path)
        with path.open("r", encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                raw = json.loads(line)
                index.add_example(
                    ExampleRecord(
                        log_text=raw["log_text"],
                        context=raw.get("context"),
                        graph=graph_from_dict(raw["graph"]),
                        embedding=Embedding.from_list(raw["embedding"]),
                        origin=ExampleOrigin(raw.get("origin", "MANUAL")),
                    )
                )
        return index


def retrieve_examples(
    index: ExampleIndex, query: Embedding, cfg: MMRConfig
) -> list[ExampleRecord]:
    """The two-stage pipeline contract: nearest ``fetch_pool`` by cosine,
    then MMR down to ``k``."""
    pool = index.search_pool(query, cfg.fetch_pool, cfg.include_generated)
    return mmr_select(query, pool, cfg)
