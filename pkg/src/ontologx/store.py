"""File-backed persistence of validated knowledge graphs.

The store is an append-only JSON-lines data file plus a sidecar id index
that maps each graph id to its byte offset. One writer holds an exclusive
advisory lock; readers open the files read-only and see committed records.
Records are write-once: ids cannot be reused or updated. A graph-database
adapter can replace this behind the same surface without touching the
pipeline.

Export produces N-Triples, one line per node-type assertion, data property,
and relationship, under a single configurable base IRI:

* node IRI:      ``<base><graph_id>/<node_id>`` (both segments %-encoded)
* class/property IRI: ``<base>ontology#<name>``
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union
from urllib.parse import quote

from .embedding import Embedding
from .errors import DuplicateId, StorageFailure, UnknownId
from .model import KnowledgeGraph, graph_from_dict, graph_to_dict

__all__ = ["StoredGraph", "GraphStore", "export_ntriples", "DEFAULT_BASE_IRI"]

DEFAULT_BASE_IRI = "http://example.org/logkg/"
RDF_TYPE_IRI = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"


@dataclass(frozen=True, eq=False)
class StoredGraph:
    """A persisted graph with its provenance annotations.

    ``graph`` must conform to the schema at write time; the pipeline
    validates before persisting, the store only enforces id uniqueness.
    """

    graph_id: str
    graph: KnowledgeGraph
    source_log: str
    context: Optional[str]
    embedding: Embedding
    created_at: str
    pipeline_run_id: str

    def to_dict(self) -> dict:
        return {
            "graph_id": self.graph_id,
            "created_at": self.created_at,
            "pipeline_run_id": self.pipeline_run_id,
            "source_log": self.source_log,
            "context": self.context,
            "embedding": self.embedding.tolist(),
            "graph": graph_to_dict(self.graph),
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "StoredGraph":
        return cls(
            graph_id=raw["graph_id"],
            graph=graph_from_dict(raw["graph"]),
            source_log=raw["source_log"],
            context=raw.get("context"),
            embedding=Embedding.from_list(raw["embedding"]),
            created_at=raw["created_at"],
            pipeline_run_id=raw["pipeline_run_id"],
        )


@dataclass(frozen=True)
class _IndexEntry:
    graph_id: str
    offset: int
    created_at: str
    pipeline_run_id: str


class GraphStore:
    """Single-writer, multi-reader store over two JSON-lines files."""

    def __init__(self, path: Union[str, Path], writable: bool = False):
        self.path = Path(path)
        self.index_path = self.path.with_name(self.path.name + ".idx")
        self.writable = writable
        self._entries: dict[str, _IndexEntry] = {}
        self._data_fh = None
        self._index_fh = None
        try:
            if writable:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                self._data_fh = open(self.path, "ab")
                self._lock(self._data_fh)
                self._index_fh = open(self.index_path, "a", encoding="utf-8")
        except OSError as exc:
            raise StorageFailure(f"cannot open store at {self.path}: {exc}") from exc
        self._load_index()

    def _lock(self, fh) -> None:
        try:
            import fcntl

            fcntl.flock(fh.fileno(), fcntl.LOCK_EX | fcntl.LOCK_NB)
        except OSError as exc:
            raise StorageFailure(
                f"store {self.path} is already opened by another writer"
            ) from exc

    def _load_index(self) -> None:
        if self.index_path.exists():
            with open(self.index_path, "r", encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    raw = json.loads(line)
                    self._entries[raw["graph_id"]] = _IndexEntry(
                        raw["graph_id"],
                        raw["offset"],
                        raw["created_at"],
                        raw["pipeline_run_id"],
                    )
        elif self.path.exists():
            # sidecar lost: rebuild by scanning the data file
            offset = 0
            with open(self.path, "rb") as fh:
                for line in fh:
                    raw = json.loads(line.decode("utf-8"))
                    self._entries[raw["graph_id"]] = _IndexEntry(
                        raw["graph_id"],
                        offset,
                        raw["created_at"],
                        raw["pipeline_run_id"],
                    )
                    offset += len(line)

    def __enter__(self) -> "GraphStore":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def close(self) -> None:
        for fh in (self._data_fh, self._index_fh):
            if fh is not None:
                fh.close()
        self._data_fh = None
        self._index_fh = None

    def __len__(self) -> int:
        return len(self._entries)

    def put(self, sg: StoredGraph) -> str:
        """Durably append a record; returns its id. Write-once semantics:
        an existing id raises ``DuplicateId``."""
        if not self.writable or self._data_fh is None:
            raise StorageFailure("store was opened read-only")
        if sg.graph_id in self._entries:
            raise DuplicateId(f"graph id {sg.graph_id!r} already stored")
        line = (
            json.dumps(sg.to_dict(), ensure_ascii=False, separators=(",", ":")) + "\n"
        ).encode("utf-8")
        try:
            offset = self._data_fh.tell()
            self._data_fh.write(line)
            self._data_fh.flush()
            os.fsync(self._data_fh.fileno())
            entry = _IndexEntry(sg.graph_id, offset, sg.created_at, sg.pipeline_run_id)
            self._index_fh.write(
                json.dumps(
                    {
                        "graph_id": entry.graph_id,
                        "offset": entry.offset,
                        "created_at": entry.created_at,
                        "pipeline_run_id": entry.pipeline_run_id,
                    },
                    ensure_ascii=False,
                    separators=(",", ":"),
                )
                + "\n"
            )
            self._index_fh.flush()
            os.fsync(self._index_fh.fileno())
        except OSError as exc:
            raise StorageFailure(f"write to {self.path} failed: {exc}") from exc
        self._entries[sg.graph_id] = entry
        return sg.graph_id

    def get(self, graph_id: str) -> StoredGraph:
        entry = self._entries.get(graph_id)
        if entry is None:
            raise UnknownId(f"no stored graph with id {graph_id!r}")
        try:
            with open(self.path, "rb") as fh:
                fh.seek(entry.offset)
                line = fh.readline().decode("utf-8")
        except OSError as exc:
            raise StorageFailure(f"read from {self.path} failed: {exc}") from exc
        return StoredGraph.from_dict(json.loads(line))

    def list_ids(self, run_id: Optional[str] = None) -> list[str]:
        """Ids ordered by (created_at, graph_id), optionally filtered by the
        pipeline run that wrote them."""
        entries = [
            e
            for e in self._entries.values()
            if run_id is None or e.pipeline_run_id == run_id
        ]
        entries.sort(key=lambda e: (e.created_at, e.graph_id))
        return [e.graph_id for e in entries]


# -- N-Triples export --------------------------------------------------------


def _escape_literal(value: str) -> str:
    out = []
    for ch in value:
        if ch == "\\":
            out.append("\\\\")
        elif ch == '"':
            out.append('\\"')
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\r":
            out.append("\\r")
        elif ch == "\t":
            out.append("\\t")
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04X}")
        else:
            out.append(ch)
    return "".join(out)


def _node_iri(base: str, graph_id: str, node_id: str) -> str:
    return f"{base}{quote(graph_id, safe='')}/{quote(node_id, safe='')}"


def _vocab_iri(base: str, name: str) -> str:
    return f"{base}ontology#{quote(name, safe='')}"


def export_ntriples(
    store: GraphStore, ids: Sequence[str], base_iri: str = DEFAULT_BASE_IRI
) -> str:
    """Render the given stored graphs as N-Triples text.

    Ordering is deterministic: graphs in the order given, and per graph each
    node's type assertion, then its data properties in node order, then the
    relationships in graph order.
    """
    lines = []
    for graph_id in ids:
        record = store.get(graph_id)  # raises UnknownId for absent ids
        g = record.graph
        for node in g.nodes:
            subject = _node_iri(base_iri, graph_id, node.id)
            lines.append(
                f"<{subject}> <{RDF_TYPE_IRI}> <{_vocab_iri(base_iri, node.node_type)}> ."
            )
            for prop in node.properties:
                lines.append(
                    f"<{subject}> <{_vocab_iri(base_iri, prop.key)}> "
                    f'"{_escape_literal(prop.value)}" .'
                )
        for rel in g.relationships:
            lines.append(
                f"<{_node_iri(base_iri, graph_id, rel.source_id)}> "
                f"<{_vocab_iri(base_iri, rel.rel_type)}> "
                f"<{_node_iri(base_iri, graph_id, rel.target_id)}> ."
            )
    return "\n".join(lines) + ("\n" if lines else "")
