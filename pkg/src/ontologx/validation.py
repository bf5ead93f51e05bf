"""Constraint validation of knowledge graphs against an ontology schema.

Implements the SHACL-style subset the log ontology needs: class and property
vocabulary membership, per-node property cardinality, enumerated values,
relationship signatures (domain/range), the exactly-one-anchor rule, and
connectivity. Full SHACL (property paths, SPARQL constraints, shape
inheritance) is out of scope.

Validation conventions, which the report ordering and the test oracles both
follow:

* Checks run in a fixed order: DUPLICATE_NODE_ID, DANGLING_ENDPOINT (the
  structural defects, folded in when the graph is not well-formed), then
  UNKNOWN_CLASS, UNKNOWN_PROPERTY, CARDINALITY_MIN, CARDINALITY_MAX,
  VALUE_NOT_IN_ENUM, UNKNOWN_RELATIONSHIP, DOMAIN_MISMATCH, RANGE_MISMATCH,
  NOT_EXACTLY_ONE_ANCHOR, DISCONNECTED_NODE. Within one check, violations
  are sorted by (subject, message).
* DUPLICATE_NODE_ID is reported once per id that occurs more than once.
* DANGLING_ENDPOINT is reported once per missing endpoint reference (a
  relationship with both ends absent yields two violations).
* Property-level checks (UNKNOWN_PROPERTY, cardinality, enums) are skipped
  for nodes whose class is unknown; their allowed-property set is undefined.
* Duplicated property keys surface through cardinality counting only: the
  occurrence count of a key feeds CARDINALITY_MIN/MAX.
* DOMAIN_MISMATCH / RANGE_MISMATCH are checked per endpoint, only for
  declared relationship types and only for endpoints that resolve to a node
  (the first node with that id when ids are duplicated).
* NOT_EXACTLY_ONE_ANCHOR is one graph-level violation when the number of
  anchor-class nodes differs from one (zero and several both violate).
* Connectivity is evaluated on the undirected view, using only
  relationships whose two endpoints exist. The main component is the one
  containing the first anchor-class node (the first node at all when no
  anchor exists); every node element outside it is DISCONNECTED_NODE. The
  empty graph yields no connectivity violations.

Whether the anchor's ``eventMessage`` equals the raw log line is reported as
a warning, never a violation: models routinely normalise whitespace and a
hard failure would burn correction rounds on cosmetics.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import EmptyInput
from .model import KnowledgeGraph, structural_check
from .ontology import OntologySchema

__all__ = [
    "ViolationCode",
    "Violation",
    "ValidationReport",
    "validate",
    "violation_rate",
]


class ViolationCode(enum.Enum):
    UNKNOWN_CLASS = "UNKNOWN_CLASS"
    UNKNOWN_PROPERTY = "UNKNOWN_PROPERTY"
    UNKNOWN_RELATIONSHIP = "UNKNOWN_RELATIONSHIP"
    DOMAIN_MISMATCH = "DOMAIN_MISMATCH"
    RANGE_MISMATCH = "RANGE_MISMATCH"
    CARDINALITY_MIN = "CARDINALITY_MIN"
    CARDINALITY_MAX = "CARDINALITY_MAX"
    VALUE_NOT_IN_ENUM = "VALUE_NOT_IN_ENUM"
    NOT_EXACTLY_ONE_ANCHOR = "NOT_EXACTLY_ONE_ANCHOR"
    DISCONNECTED_NODE = "DISCONNECTED_NODE"
    DANGLING_ENDPOINT = "DANGLING_ENDPOINT"
    DUPLICATE_NODE_ID = "DUPLICATE_NODE_ID"


GRAPH_SUBJECT = "graph"


@dataclass(frozen=True)
class Violation:
    code: ViolationCode
    subject: str
    message: str

    def to_dict(self) -> dict:
        return {"code": self.code.value, "subject": self.subject, "message": self.message}


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "violations", tuple(self.violations))
        object.__setattr__(self, "warnings", tuple(self.warnings))

    @property
    def conforms(self) -> bool:
        return not self.violations

    def codes(self) -> list[ViolationCode]:
        return [v.code for v in self.violations]

    def to_dict(self) -> dict:
        return {
            "conforms": self.conforms,
            "violations": [v.to_dict() for v in self.violations],
            "warnings": list(self.warnings),
        }

    def to_json(self, indent: Optional[int] = 2) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=indent)


def _sorted(batch: list[Violation]) -> list[Violation]:
    return sorted(batch, key=lambda v: (v.subject, v.message))


def validate(
    g: KnowledgeGraph,
    schema: OntologySchema,
    raw_event_text: Optional[str] = None,
) -> ValidationReport:
    """Check ``g`` against every constraint kind; pure function of its inputs.

    All findings come back as violations in the report, never as raised
    errors. When ``raw_event_text`` is given, a mismatching ``eventMessage``
    on the anchor node is added as a warning.
    """
    violations: list[Violation] = []

    # structural defects folded in first
    batch: list[Violation] = []
    for err in structural_check(g):
        if err.kind == "DuplicateNodeId":
            batch.append(Violation(ViolationCode.DUPLICATE_NODE_ID, err.subject, err.message))
    violations.extend(_sorted(batch))
    batch = []
    for err in structural_check(g):
        if err.kind == "DanglingEndpoint":
            batch.append(Violation(ViolationCode.DANGLING_ENDPOINT, err.subject, err.message))
    violations.extend(_sorted(batch))

    known_class = {c.name: c for c in schema.classes}

    batch = []
    for n in g.nodes:
        if n.node_type not in known_class:
            batch.append(
                Violation(
                    ViolationCode.UNKNOWN_CLASS,
                    n.id,
                    f"node {n.id!r} has undeclared class {n.node_type!r}",
                )
            )
    violations.extend(_sorted(batch))

    batch = []
    for n in g.nodes:
        cls = known_class.get(n.node_type)
        if cls is None:
            continue
        allowed = set(cls.allowed_keys())
        for p in n.properties:
            if p.key not in allowed:
                batch.append(
                    Violation(
                        ViolationCode.UNKNOWN_PROPERTY,
                        n.id,
                        f"node {n.id!r} ({n.node_type}) carries undeclared property {p.key!r}",
                    )
                )
    violations.extend(_sorted(batch))

    batch = []
    for n in g.nodes:
        cls = known_class.get(n.node_type)
        if cls is None:
            continue
        for spec in cls.properties:
            count = sum(1 for p in n.properties if p.key == spec.key)
            if count < spec.min_count:
                batch.append(
                    Violation(
                        ViolationCode.CARDINALITY_MIN,
                        n.id,
                        f"node {n.id!r} has {count} value(s) of {spec.key!r}, "
                        f"minimum is {spec.min_count}",
                    )
                )
    violations.extend(_sorted(batch))

    batch = []
    for n in g.nodes:
        cls = known_class.get(n.node_type)
        if cls is None:
            continue
        for spec in cls.properties:
            if spec.max_count is None:
                continue
            count = sum(1 for p in n.properties if p.key == spec.key)
            if count > spec.max_count:
                batch.append(
                    Violation(
                        ViolationCode.CARDINALITY_MAX,
                        n.id,
                        f"node {n.id!r} has {count} value(s) of {spec.key!r}, "
                        f"maximum is {spec.max_count}",
                    )
                )
    violations.extend(_sorted(batch))

    batch = []
    for n in g.nodes:
        cls = known_class.get(n.node_type)
        if cls is None:
            continue
        for p in n.properties:
            spec = cls.property_spec(p.key)
            if spec is None or spec.value_constraint is None:
                continue
            if p.value not in spec.value_constraint:
                batch.append(
                    Violation(
                        ViolationCode.VALUE_NOT_IN_ENUM,
                        n.id,
                        f"node {n.id!r} property {p.key!r} has value {p.value!r}, "
                        f"allowed: {', '.join(spec.value_constraint)}",
                    )
                )
    violations.extend(_sorted(batch))

    known_rel = {r.rel_type: r for r in schema.relationships}

    batch = []
    for r in g.relationships:
        if r.rel_type not in known_rel:
            batch.append(
                Violation(
                    ViolationCode.UNKNOWN_RELATIONSHIP,
                    r.label(),
                    f"relationship type {r.rel_type!r} is not declared",
                )
            )
    violations.extend(_sorted(batch))

    batch = []
    for r in g.relationships:
        spec = known_rel.get(r.rel_type)
        if spec is None:
            continue
        source = g.find_node(r.source_id)
        if source is not None and source.node_type != spec.source_class:
            batch.append(
                Violation(
                    ViolationCode.DOMAIN_MISMATCH,
                    r.label(),
                    f"relationship {r.rel_type!r} requires source class "
                    f"{spec.source_class!r}, found {source.node_type!r}",
                )
            )
    violations.extend(_sorted(batch))

    batch = []
    for r in g.relationships:
        spec = known_rel.get(r.rel_type)
        if spec is None:
            continue
        target = g.find_node(r.target_id)
        if target is not None and target.node_type != spec.target_class:
            batch.append(
                Violation(
                    ViolationCode.RANGE_MISMATCH,
                    r.label(),
                    f"relationship {r.rel_type!r} requires target class "
                    f"{spec.target_class!r}, found {target.node_type!r}",
                )
            )
    violations.extend(_sorted(batch))

    anchors = [n for n in g.nodes if n.node_type == schema.anchor_class]
    if len(anchors) != 1:
        violations.append(
            Violation(
                ViolationCode.NOT_EXACTLY_ONE_ANCHOR,
                GRAPH_SUBJECT,
                f"graph must contain exactly one {schema.anchor_class!r} node, "
                f"found {len(anchors)}",
            )
        )

    violations.extend(_sorted(_connectivity_violations(g, schema)))

    warnings: list[str] = []
    if raw_event_text is not None and len(anchors) == 1:
        messages = anchors[0].property_values("eventMessage")
        if messages and messages[0] != raw_event_text:
            warnings.append(
                f"anchor eventMessage differs from the raw log line "
                f"(node {anchors[0].id!r})"
            )

    return ValidationReport(violations=tuple(violations), warnings=tuple(warnings))


def _connectivity_violations(g: KnowledgeGraph, schema: OntologySchema) -> list[Violation]:
    if not g.nodes:
        return []

    ids = {n.id for n in g.nodes}
    parent = {i: i for i in ids}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: str, b: str):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    for r in g.relationships:
        if r.source_id in ids and r.target_id in ids:
            union(r.source_id, r.target_id)

    main_node = next(
        (n for n in g.nodes if n.node_type == schema.anchor_class), g.nodes[0]
    )
    main_root = find(main_node.id)
    return [
        Violation(
            ViolationCode.DISCONNECTED_NODE,
            n.id,
            f"node {n.id!r} is not connected to the anchor component",
        )
        for n in g.nodes
        if find(n.id) != main_root
    ]


def violation_rate(reports: Sequence[ValidationReport]) -> float:
    """Fraction of reports that do not conform."""
    if not reports:
        raise EmptyInput("violation_rate requires at least one report")
    return sum(1 for r in reports if not r.conforms) / len(reports)
