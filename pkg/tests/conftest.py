from __future__ import annotations

import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ontologx.model import GraphNode, GraphRelationship, KnowledgeGraph, NodeProperty
from ontologx.ontology import LOG_LEVELS, default_schema
from ontologx import backend as backend_mod


@pytest.fixture(scope="session")
def schema():
    return default_schema()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    rows = []
    for status, label in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for report in terminalreporter.stats.get(status, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance" in nodeid and "::" in nodeid:
                rows.append((nodeid.split("::")[-1], label))
    if rows:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, label in sorted(set(rows)):
            terminalreporter.write_line(f"{label}  {name}")


@pytest.fixture(autouse=True)
def clean_backend_registry():
    yield
    for backend_id in list(backend_mod.registered_backends()):
        backend_mod.unregister_backend(backend_id)


def valid_event_graph(
    message: str = "sshd[123]: Failed password for root from 10.0.0.1",
    level: str = "INFO",
    extras: int = 0,
    rng: random.Random | None = None,
) -> KnowledgeGraph:
    """A conforming graph: one Event node plus ``extras`` connected
    auxiliary nodes with valid optional properties."""
    rng = rng or random.Random(0)
    aux_pool = [
        ("UserIdentity", "hasUser", [("userUID", "1000"), ("userName", "root")]),
        ("Application", "hasApplication", [("applicationName", "sshd")]),
        ("Process", "hasProcess", [("processName", "sshd"), ("processPID", "123")]),
        ("File", "hasFile", [("fileName", "/var/log/auth.log")]),
        ("NetworkAddress", "hasNetworkAddress", [("addressIP", "10.0.0.1"), ("addressPort", "22")]),
        ("Source", "hasSource", [("sourceName", "auth")]),
        ("URL", "hasURL", [("urlValue", "http://example.com/x")]),
        ("Instant", "hasTimestamp", [("timestampValue", "2022-01-21T03:49:44Z")]),
    ]
    nodes = [
        GraphNode(
            "n0",
            "Event",
            (NodeProperty("eventMessage", message), NodeProperty("logLevel", level)),
        )
    ]
    relationships = []
    for i, (cls, rel, props) in enumerate(rng.sample(aux_pool, k=min(extras, len(aux_pool))), start=1):
        chosen = props[: rng.randint(0, len(props))]
        nodes.append(GraphNode(f"n{i}", cls, tuple(NodeProperty(k, v) for k, v in chosen)))
        relationships.append(GraphRelationship("n0", f"n{i}", rel))
    return KnowledgeGraph(tuple(nodes), tuple(relationships))


def random_conforming_graph(rng: random.Random) -> KnowledgeGraph:
    return valid_event_graph(
        message=f"event {rng.randint(0, 10**9)}",
        level=rng.choice(LOG_LEVELS),
        extras=rng.randint(0, 5),
        rng=rng,
    )


def _with_node(g: KnowledgeGraph, node: GraphNode) -> KnowledgeGraph:
    return KnowledgeGraph(g.nodes + (node,), g.relationships)


def _with_rel(g: KnowledgeGraph, rel: GraphRelationship) -> KnowledgeGraph:
    return KnowledgeGraph(g.nodes, g.relationships + (rel,))


def _mutate_event_props(g: KnowledgeGraph, props) -> KnowledgeGraph:
    nodes = tuple(
        GraphNode(n.id, n.node_type, props) if n.node_type == "Event" else n
        for n in g.nodes
    )
    return KnowledgeGraph(nodes, g.relationships)


def inject_defect(g: KnowledgeGraph, code: str, rng: random.Random) -> KnowledgeGraph:
    """Mutate a conforming graph so that at least one violation of ``code``
    appears (cascades into other codes are fine and expected)."""
    event = next(n for n in g.nodes if n.node_type == "Event")
    if code == "UNKNOWN_CLASS":
        g = _with_node(g, GraphNode("nx", "Widget", (NodeProperty("w", "1"),)))
        return _with_rel(g, GraphRelationship(event.id, "nx", "hasFile"))
    if code == "UNKNOWN_PROPERTY":
        return _mutate_event_props(
            g, event.properties + (NodeProperty("bogusProp", "x"),)
        )
    if code == "UNKNOWN_RELATIONSHIP":
        g = _with_node(g, GraphNode("nx", "File", ()))
        return _with_rel(g, GraphRelationship(event.id, "nx", "owns"))
    if code == "DOMAIN_MISMATCH":
        g = _with_node(g, GraphNode("nx", "File", ()))
        g = _with_rel(g, GraphRelationship(event.id, "nx", "hasFile"))
        return _with_rel(g, GraphRelationship("nx", event.id, "hasUser"))
    if code == "RANGE_MISMATCH":
        g = _with_node(g, GraphNode("nx", "File", ()))
        g = _with_rel(g, GraphRelationship(event.id, "nx", "hasFile"))
        return _with_rel(g, GraphRelationship(event.id, "nx", "hasUser"))
    if code == "CARDINALITY_MIN":
        kept = tuple(p for p in event.properties if p.key != "logLevel")
        return _mutate_event_props(g, kept)
    if code == "CARDINALITY_MAX":
        return _mutate_event_props(
            g, event.properties + (NodeProperty("logLevel", "DEBUG"),)
        )
    if code == "VALUE_NOT_IN_ENUM":
        swapped = tuple(
            NodeProperty(p.key, "LOUD") if p.key == "logLevel" else p
            for p in event.properties
        )
        return _mutate_event_props(g, swapped)
    if code == "NOT_EXACTLY_ONE_ANCHOR":
        if rng.random() < 0.5:
            extra = GraphNode(
                "nx",
                "Event",
                (NodeProperty("eventMessage", "again"), NodeProperty("logLevel", "INFO")),
            )
            return _with_node(g, extra)
        nodes = tuple(n for n in g.nodes if n.id != event.id)
        rels = tuple(
            r
            for r in g.relationships
            if r.source_id != event.id and r.target_id != event.id
        )
        return KnowledgeGraph(nodes, rels)
    if code == "DISCONNECTED_NODE":
        return _with_node(g, GraphNode("nx", "File", (NodeProperty("fileName", "f"),)))
    if code == "DANGLING_ENDPOINT":
        return _with_rel(g, GraphRelationship(event.id, "ghost", "hasFile"))
    if code == "DUPLICATE_NODE_ID":
        return _with_node(g, GraphNode(event.id, "File", ()))
    raise ValueError(f"no injector for {code}")


ALL_CODES = [
    "UNKNOWN_CLASS",
    "UNKNOWN_PROPERTY",
    "UNKNOWN_RELATIONSHIP",
    "DOMAIN_MISMATCH",
    "RANGE_MISMATCH",
    "CARDINALITY_MIN",
    "CARDINALITY_MAX",
    "VALUE_NOT_IN_ENUM",
    "NOT_EXACTLY_ONE_ANCHOR",
    "DISCONNECTED_NODE",
    "DANGLING_ENDPOINT",
    "DUPLICATE_NODE_ID",
]


def random_messy_graph(rng: random.Random) -> KnowledgeGraph:
    """Fully random small graph over a mixed vocabulary; exercises every
    check at once."""
    classes = ["Event", "File", "Process", "Widget", "UserIdentity"]
    keys = ["eventMessage", "logLevel", "fileName", "bogus", "processPID"]
    rels = ["hasUser", "hasFile", "owns", "hasProcess"]
    node_count = rng.randint(0, 6)
    nodes = []
    for i in range(node_count):
        node_id = f"n{rng.randint(0, node_count)}"  # collisions on purpose
        props = tuple(
            NodeProperty(rng.choice(keys), rng.choice(["x", "INFO", "LOUD", "42"]))
            for _ in range(rng.randint(0, 3))
        )
        nodes.append(GraphNode(node_id, rng.choice(classes), props))
    ids = [n.id for n in nodes] + ["ghost"]
    relationships = []
    for _ in range(rng.randint(0, 4)):
        if not ids:
            break
        relationships.append(
            GraphRelationship(rng.choice(ids), rng.choice(ids), rng.choice(rels))
        )
    return KnowledgeGraph(tuple(nodes), tuple(relationships))
