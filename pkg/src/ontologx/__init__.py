"""Ontology-guided knowledge-graph extraction from raw log events.

The pipeline turns one log line at a time into a small, ontology-compliant
property graph: retrieve similar worked examples from a vector index,
prompt a language-model backend under a structured-output contract,
validate the candidate graph against the ontology's constraints, feed
violations back as correction prompts for a bounded number of rounds, and
persist what conforms. An evaluation harness scores generated graphs
against gold annotations at the triple level.
"""

from .backend import GenerationConfig, Mode, ScriptedBackend, register_backend
from .embedding import Embedding, HashingEmbedder, cosine_sim
from .errors import OntologxError
from .model import (
    EMPTY_GRAPH,
    GraphNode,
    GraphRelationship,
    KnowledgeGraph,
    LogEvent,
    NodeProperty,
    OutcomeStatus,
    PipelineOutcome,
    graph_from_json,
    graph_is_empty,
    graph_to_json,
    structural_check,
)
from .ontology import OntologySchema, default_schema, load_schema, relationship_triples
from .pipeline import PipelineConfig, process_event, run_stream
from .retrieval import ExampleIndex, ExampleRecord, MMRConfig, mmr_select
from .store import GraphStore, StoredGraph, export_ntriples
from .validation import ValidationReport, Violation, ViolationCode, validate, violation_rate

__version__ = "0.1.0"
