"""The log ontology as data: classes, data properties, relationship signatures.

The built-in schema anchors every graph on an ``Event`` node and connects it
to auxiliary entity classes (user identity, process, network address, ...)
through one object property per class. Temporal information hangs off an
``Instant`` node. Schemas are immutable after load and safe for shared reads.

Schema files are single JSON documents mirroring the type structure here;
see ``default_ontology.json`` under ``assets/`` for the shipped one.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .errors import ParseError, SemanticError

__all__ = [
    "PropertySpec",
    "ClassSpec",
    "RelationshipSpec",
    "OntologySchema",
    "LOG_LEVELS",
    "default_schema",
    "load_schema",
    "loads_schema",
    "serialize_schema",
    "relationship_triples",
]

LOG_LEVELS = ("TRACE", "DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


@dataclass(frozen=True)
class PropertySpec:
    """Cardinality and value constraints for one data property.

    ``max_count=None`` means unbounded. ``required`` is shorthand for
    ``min_count >= 1``.
    """

    key: str
    min_count: int = 0
    max_count: Optional[int] = 1
    value_constraint: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        if self.max_count is not None and self.min_count > self.max_count:
            raise SemanticError(
                f"property {self.key!r}: min_count {self.min_count} exceeds "
                f"max_count {self.max_count}"
            )
        if self.value_constraint is not None:
            object.__setattr__(self, "value_constraint", tuple(self.value_constraint))

    @property
    def required(self) -> bool:
        return self.min_count >= 1


@dataclass(frozen=True)
class ClassSpec:
    name: str
    properties: tuple[PropertySpec, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "properties", tuple(self.properties))

    def property_spec(self, key: str) -> Optional[PropertySpec]:
        for p in self.properties:
            if p.key == key:
                return p
        return None

    def allowed_keys(self) -> list[str]:
        return [p.key for p in self.properties]


@dataclass(frozen=True)
class RelationshipSpec:
    rel_type: str
    source_class: str
    target_class: str


@dataclass(frozen=True)
class OntologySchema:
    classes: tuple[ClassSpec, ...]
    relationships: tuple[RelationshipSpec, ...]
    anchor_class: str = "Event"

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "relationships", tuple(self.relationships))
        names = [c.name for c in self.classes]
        if len(set(names)) != len(names):
            raise SemanticError("class names must be unique")
        declared = set(names)
        if self.anchor_class not in declared:
            raise SemanticError(f"anchor class {self.anchor_class!r} is not declared")
        for r in self.relationships:
            for cls in (r.source_class, r.target_class):
                if cls not in declared:
                    raise SemanticError(
                        f"relationship {r.rel_type!r} references undeclared class {cls!r}"
                    )

    def class_spec(self, name: str) -> Optional[ClassSpec]:
        for c in self.classes:
            if c.name == name:
                return c
        return None

    def class_names(self) -> list[str]:
        return [c.name for c in self.classes]

    def relationship_spec(self, rel_type: str) -> Optional[RelationshipSpec]:
        for r in self.relationships:
            if r.rel_type == rel_type:
                return r
        return None


def default_schema() -> OntologySchema:
    """The built-in log ontology.

    ``Event`` requires exactly one ``eventMessage`` (the original log text)
    and exactly one ``logLevel`` drawn from the syslog-style severity set.
    Each auxiliary class carries a small set of optional, prefix-named data
    properties and is reachable from ``Event`` via one object property.
    """

    def optional(*keys: str) -> tuple[PropertySpec, ...]:
        return tuple(PropertySpec(k, 0, 1) for k in keys)

    classes = (
        ClassSpec(
            "Event",
            (
                PropertySpec("eventMessage", 1, 1),
                PropertySpec("logLevel", 1, 1, value_constraint=LOG_LEVELS),
            ),
        ),
        ClassSpec("UserIdentity", optional("userUID", "userName")),
        ClassSpec("Application", optional("applicationName")),
        ClassSpec("Process", optional("processName", "processPID")),
        ClassSpec("File", optional("fileName")),
        ClassSpec("NetworkAddress", optional("addressIP", "addressPort")),
        ClassSpec("Source", optional("sourceName")),
        ClassSpec("URL", optional("urlValue")),
        ClassSpec("Instant", optional("timestampValue")),
    )
    relationships = (
        RelationshipSpec("hasUser", "Event", "UserIdentity"),
        RelationshipSpec("hasApplication", "Event", "Application"),
        RelationshipSpec("hasProcess", "Event", "Process"),
        RelationshipSpec("hasFile", "Event", "File"),
        RelationshipSpec("hasNetworkAddress", "Event", "NetworkAddress"),
        RelationshipSpec("hasSource", "Event", "Source"),
        RelationshipSpec("hasURL", "Event", "URL"),
        RelationshipSpec("hasTimestamp", "Event", "Instant"),
    )
    return OntologySchema(classes=classes, relationships=relationships, anchor_class="Event")


def relationship_triples(schema: OntologySchema) -> list[tuple[str, str, str]]:
    """All relationship signatures as (source class, type, target class),
    sorted for deterministic prompt rendering."""
    return sorted(
        (r.source_class, r.rel_type, r.target_class) for r in schema.relationships
    )


# -- schema file format ----------------------------------------------------


def _schema_to_dict(schema: OntologySchema) -> dict:
    return {
        "anchor_class": schema.anchor_class,
        "classes": [
            {
                "name": c.name,
                "properties": [
                    {
                        "key": p.key,
                        "min_count": p.min_count,
                        "max_count": p.max_count,
                        **(
                            {"values": list(p.value_constraint)}
                            if p.value_constraint is not None
                            else {}
                        ),
                    }
                    for p in c.properties
                ],
            }
            for c in schema.classes
        ],
        "relationships": [
            {"type": r.rel_type, "source": r.source_class, "target": r.target_class}
            for r in schema.relationships
        ],
    }


def serialize_schema(schema: OntologySchema) -> str:
    return json.dumps(_schema_to_dict(schema), ensure_ascii=False, indent=2) + "\n"


def loads_schema(text: str) -> OntologySchema:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"schema file is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ParseError("schema document must be a JSON object")

    def expect(obj: dict, key: str, where: str):
        if key not in obj:
            raise ParseError(f"schema {where} is missing {key!r}")
        return obj[key]

    raw_classes = expect(payload, "classes", "document")
    raw_rels = expect(payload, "relationships", "document")
    anchor = expect(payload, "anchor_class", "document")
    if not isinstance(raw_classes, list) or not isinstance(raw_rels, list):
        raise ParseError("schema classes/relationships must be lists")
    if not isinstance(anchor, str):
        raise ParseError("schema anchor_class must be a string")

    classes = []
    for raw in raw_classes:
        if not isinstance(raw, dict):
            raise ParseError("each class entry must be an object")
        name = expect(raw, "name", "class")
        props = []
        for rawp in raw.get("properties", []):
            if not isinstance(rawp, dict) or "key" not in rawp:
                raise ParseError(f"malformed property entry in class {name!r}")
            values = rawp.get("values")
            props.append(
                PropertySpec(
                    key=rawp["key"],
                    min_count=int(rawp.get("min_count", 0)),
                    max_count=(
                        None if rawp.get("max_count") is None else int(rawp["max_count"])
                    ),
                    value_constraint=tuple(values) if values is not None else None,
                )
            )
        classes.append(ClassSpec(name=name, properties=tuple(props)))

    relationships = []
    for raw in raw_rels:
        if not isinstance(raw, dict):
            raise ParseError("each relationship entry must be an object")
        relationships.append(
            RelationshipSpec(
                rel_type=expect(raw, "type", "relationship"),
                source_class=expect(raw, "source", "relationship"),
                target_class=expect(raw, "target", "relationship"),
            )
        )

    # OntologySchema.__post_init__ raises SemanticError on dangling references
    return OntologySchema(
        classes=tuple(classes), relationships=tuple(relationships), anchor_class=anchor
    )


def load_schema(path: Union[str, Path]) -> OntologySchema:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read schema file {path}: {exc}") from exc
    if not text.strip():
        raise ParseError(f"schema file {path} is empty")
    return loads_schema(text)
