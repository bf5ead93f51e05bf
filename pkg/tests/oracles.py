"""Independent brute-force oracles used to check the production paths.

Everything here is deliberately naive and written against the documented
contracts, not against the implementation: the validator oracle re-walks
every constraint with plain loops and BFS, the MMR oracle recomputes the
greedy objective per pick, the metrics oracle rebuilds canonical triples
from scratch, and the N-Triples helpers re-parse exported text and test
graph isomorphism by trying node bijections.
"""

from __future__ import annotations

import hashlib
import itertools
import re
import unicodedata
from collections import Counter
from urllib.parse import unquote

import numpy as np

from ontologx.model import GraphNode, GraphRelationship, KnowledgeGraph, NodeProperty


# -- validator oracle ---------------------------------------------------------


def oracle_validate_codes(g, schema) -> Counter:
    """Multiset of violation codes per the documented validation conventions."""
    codes: Counter = Counter()

    id_counts: dict[str, int] = {}
    for n in g.nodes:
        id_counts[n.id] = id_counts.get(n.id, 0) + 1
    codes["DUPLICATE_NODE_ID"] += sum(1 for c in id_counts.values() if c > 1)

    for r in g.relationships:
        if r.source_id not in id_counts:
            codes["DANGLING_ENDPOINT"] += 1
        if r.target_id not in id_counts:
            codes["DANGLING_ENDPOINT"] += 1

    class_by_name = {c.name: c for c in schema.classes}
    for n in g.nodes:
        if n.node_type not in class_by_name:
            codes["UNKNOWN_CLASS"] += 1
            continue  # property-level checks are defined only for known classes
        cls = class_by_name[n.node_type]
        allowed = {p.key: p for p in cls.properties}
        for p in n.properties:
            if p.key not in allowed:
                codes["UNKNOWN_PROPERTY"] += 1
        for spec in cls.properties:
            count = sum(1 for p in n.properties if p.key == spec.key)
            if count < spec.min_count:
                codes["CARDINALITY_MIN"] += 1
            if spec.max_count is not None and count > spec.max_count:
                codes["CARDINALITY_MAX"] += 1
        for p in n.properties:
            spec = allowed.get(p.key)
            if (
                spec is not None
                and spec.value_constraint is not None
                and p.value not in spec.value_constraint
            ):
                codes["VALUE_NOT_IN_ENUM"] += 1

    rel_by_type = {r.rel_type: r for r in schema.relationships}
    first_node: dict[str, GraphNode] = {}
    for n in g.nodes:
        first_node.setdefault(n.id, n)
    for r in g.relationships:
        spec = rel_by_type.get(r.rel_type)
        if spec is None:
            codes["UNKNOWN_RELATIONSHIP"] += 1
            continue
        source = first_node.get(r.source_id)
        if source is not None and source.node_type != spec.source_class:
            codes["DOMAIN_MISMATCH"] += 1
        target = first_node.get(r.target_id)
        if target is not None and target.node_type != spec.target_class:
            codes["RANGE_MISMATCH"] += 1

    anchors = sum(1 for n in g.nodes if n.node_type == schema.anchor_class)
    if anchors != 1:
        codes["NOT_EXACTLY_ONE_ANCHOR"] += 1

    if g.nodes:
        adjacency: dict[str, set[str]] = {i: set() for i in id_counts}
        for r in g.relationships:
            if r.source_id in id_counts and r.target_id in id_counts:
                adjacency[r.source_id].add(r.target_id)
                adjacency[r.target_id].add(r.source_id)
        start = None
        for n in g.nodes:
            if n.node_type == schema.anchor_class:
                start = n.id
                break
        if start is None:
            start = g.nodes[0].id
        reached = {start}
        frontier = [start]
        while frontier:
            current = frontier.pop()
            for nxt in adjacency[current]:
                if nxt not in reached:
                    reached.add(nxt)
                    frontier.append(nxt)
        for n in g.nodes:
            if n.id not in reached:
                codes["DISCONNECTED_NODE"] += 1

    return +codes  # drop zero entries


# -- MMR oracle ---------------------------------------------------------------


def oracle_cosine(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))


def oracle_mmr(query: np.ndarray, candidates: list[np.ndarray], lam: float, k: int):
    """Greedy MMR recomputed from the objective at every pick; ties go to the
    lowest index."""
    n = len(candidates)
    k = min(k, n)
    query_sims = [oracle_cosine(c, query) for c in candidates]
    selected: list[int] = []
    remaining = list(range(n))
    for _ in range(k):
        best = None
        best_score = None
        for i in remaining:
            if not selected:
                score = query_sims[i]
            else:
                score = lam * query_sims[i] - (1.0 - lam) * max(
                    oracle_cosine(candidates[i], candidates[j]) for j in selected
                )
            if best_score is None or score > best_score:
                best, best_score = i, score
        selected.append(best)
        remaining.remove(best)
    return selected


def oracle_top_k(query: np.ndarray, candidates: list[np.ndarray], k: int):
    sims = [oracle_cosine(c, query) for c in candidates]
    order = sorted(range(len(candidates)), key=lambda i: (-sims[i], i))
    return order[: min(k, len(candidates))]


# -- metrics oracle -----------------------------------------------------------


def _norm_text(s: str) -> str:
    return unicodedata.normalize("NFC", s).strip()


def oracle_triples(g: KnowledgeGraph) -> set[tuple[str, str, str]]:
    def node_key(node: GraphNode) -> str:
        pairs = sorted((_norm_text(p.key), _norm_text(p.value)) for p in node.properties)
        blob = "\x1f".join(f"{k}\x1e{v}" for k, v in pairs)
        return (
            _norm_text(node.node_type)
            + "#"
            + hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]
        )

    key_of: dict[str, str] = {}
    for n in g.nodes:
        key_of.setdefault(n.id, node_key(n))
    out: set[tuple[str, str, str]] = set()
    for n in g.nodes:
        for p in n.properties:
            out.add((key_of[n.id], _norm_text(p.key), _norm_text(p.value)))
    for r in g.relationships:
        if r.source_id in key_of and r.target_id in key_of:
            out.add((key_of[r.source_id], _norm_text(r.rel_type), key_of[r.target_id]))
    return out


def oracle_prf1(generated: KnowledgeGraph, gold: KnowledgeGraph):
    gen, ref = oracle_triples(generated), oracle_triples(gold)
    hit = len(gen & ref)
    precision = hit / len(gen) if gen else 0.0
    recall = hit / len(ref) if ref else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


# -- N-Triples re-parsing and graph isomorphism --------------------------------

_NT_LINE = re.compile(
    r'^<([^>]*)> <([^>]*)> (?:<([^>]*)>|"((?:[^"\\]|\\.)*)") \.$'
)
_RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"


def _unescape_literal(s: str) -> str:
    out = []
    i = 0
    while i < len(s):
        ch = s[i]
        if ch == "\\":
            nxt = s[i + 1]
            if nxt == "u":
                out.append(chr(int(s[i + 2 : i + 6], 16)))
                i += 6
                continue
            out.append({"n": "\n", "r": "\r", "t": "\t", '"': '"', "\\": "\\"}[nxt])
            i += 2
            continue
        out.append(ch)
        i += 1
    return "".join(out)


def parse_ntriples(text: str, base_iri: str) -> dict[str, KnowledgeGraph]:
    """Re-assemble exported graphs, keyed by graph id."""

    def split_node(iri: str) -> tuple[str, str]:
        rest = iri[len(base_iri):]
        gid, nid = rest.split("/", 1)
        return unquote(gid), unquote(nid)

    def vocab(iri: str) -> str:
        return unquote(iri[len(base_iri) + len("ontology#"):])

    node_types: dict[tuple[str, str], str] = {}
    node_props: dict[tuple[str, str], list[NodeProperty]] = {}
    rels: dict[str, list[GraphRelationship]] = {}
    order: dict[str, list[str]] = {}

    for line in text.splitlines():
        if not line.strip():
            continue
        m = _NT_LINE.match(line)
        assert m, f"line does not parse as N-Triples: {line!r}"
        subject, predicate, obj_iri, obj_literal = m.groups()
        gid, nid = split_node(subject)
        order.setdefault(gid, [])
        if predicate == _RDF_TYPE:
            node_types[(gid, nid)] = vocab(obj_iri)
            order[gid].append(nid)
        elif obj_literal is not None:
            node_props.setdefault((gid, nid), []).append(
                NodeProperty(vocab(predicate), _unescape_literal(obj_literal))
            )
        else:
            _, target_nid = split_node(obj_iri)
            rels.setdefault(gid, []).append(
                GraphRelationship(nid, target_nid, vocab(predicate))
            )

    graphs = {}
    for gid, nids in order.items():
        nodes = tuple(
            GraphNode(nid, node_types[(gid, nid)], tuple(node_props.get((gid, nid), [])))
            for nid in nids
        )
        graphs[gid] = KnowledgeGraph(nodes, tuple(rels.get(gid, [])))
    return graphs


def graphs_isomorphic(a: KnowledgeGraph, b: KnowledgeGraph) -> bool:
    """Brute-force node-bijection isomorphism; adequate for tiny graphs."""
    if len(a.nodes) != len(b.nodes) or len(a.relationships) != len(b.relationships):
        return False

    def signature(node: GraphNode):
        return (node.node_type, tuple(sorted((p.key, p.value) for p in node.properties)))

    if sorted(map(signature, a.nodes)) != sorted(map(signature, b.nodes)):
        return False

    b_ids = [n.id for n in b.nodes]
    b_sig = {n.id: signature(n) for n in b.nodes}
    a_rels = Counter((r.source_id, r.rel_type, r.target_id) for r in a.relationships)
    for perm in itertools.permutations(b_ids):
        mapping = {an.id: bid for an, bid in zip(a.nodes, perm)}
        if any(signature(an) != b_sig[mapping[an.id]] for an in a.nodes):
            continue
        mapped = Counter(
            (mapping.get(r.source_id, "?"), r.rel_type, mapping.get(r.target_id, "?"))
            for r in a.relationships
        )
        if mapped == Counter(
            (r.source_id, r.rel_type, r.target_id) for r in b.relationships
        ):
            return True
    return False
