import random
from collections import Counter

import pytest

from ontologx.errors import EmptyInput
from ontologx.model import (
    GraphNode,
    GraphRelationship,
    KnowledgeGraph,
    NodeProperty,
)
from ontologx.validation import ValidationReport, ViolationCode, validate, violation_rate

from conftest import ALL_CODES, inject_defect, random_conforming_graph, random_messy_graph, valid_event_graph
from oracles import oracle_validate_codes


def codes_of(report):
    return Counter(v.code.value for v in report.violations)


def test_valid_single_event_graph_conforms(schema):
    report = validate(valid_event_graph(), schema)
    assert report.conforms
    assert report.violations == ()


def test_zero_event_nodes_flagged(schema):
    g = KnowledgeGraph((GraphNode("n1", "File", (NodeProperty("fileName", "f"),)),), ())
    report = validate(g, schema)
    assert ViolationCode.NOT_EXACTLY_ONE_ANCHOR in report.codes()


def test_isolated_node_flagged(schema):
    g = valid_event_graph()
    g = KnowledgeGraph(g.nodes + (GraphNode("n9", "File", ()),), g.relationships)
    report = validate(g, schema)
    disconnected = [v for v in report.violations if v.code is ViolationCode.DISCONNECTED_NODE]
    assert [v.subject for v in disconnected] == ["n9"]


def test_undeclared_relationship_type_flagged(schema):
    g = valid_event_graph(extras=1)
    other = next(n for n in g.nodes if n.node_type != "Event")
    g = KnowledgeGraph(
        g.nodes, g.relationships + (GraphRelationship("n0", other.id, "owns"),)
    )
    report = validate(g, schema)
    assert ViolationCode.UNKNOWN_RELATIONSHIP in report.codes()


def test_empty_graph_reports_missing_anchor(schema):
    report = validate(KnowledgeGraph(), schema)
    assert codes_of(report) == Counter({"NOT_EXACTLY_ONE_ANCHOR": 1})


def test_structural_defects_fold_in(schema):
    g = valid_event_graph()
    g = KnowledgeGraph(
        g.nodes + (GraphNode("n0", "File", ()),),
        g.relationships + (GraphRelationship("n0", "ghost", "hasFile"),),
    )
    report = validate(g, schema)
    assert ViolationCode.DUPLICATE_NODE_ID in report.codes()
    assert ViolationCode.DANGLING_ENDPOINT in report.codes()


def test_event_message_mismatch_is_warning_not_violation(schema):
    report = validate(valid_event_graph(message="normalised text"), schema,
                      raw_event_text="original   text")
    assert report.conforms
    assert report.warnings


def test_event_message_match_produces_no_warning(schema):
    report = validate(valid_event_graph(message="same"), schema, raw_event_text="same")
    assert report.conforms and not report.warnings


def test_reports_are_deterministic(schema):
    rng = random.Random(3)
    for _ in range(25):
        g = random_messy_graph(rng)
        assert validate(g, schema) == validate(g, schema)


@pytest.mark.parametrize("code", ALL_CODES)
def test_injected_defect_detected(code, schema):
    rng = random.Random(hash(code) % 2**31)
    g = inject_defect(valid_event_graph(extras=2), code, rng)
    report = validate(g, schema)
    assert code in {v.code.value for v in report.violations}
    assert codes_of(report) == oracle_validate_codes(g, schema)


@pytest.mark.parametrize("code", ALL_CODES)
def test_monotonic_no_new_violations_after_repair(code, schema):
    """Removing the injected defect (by reverting to the clean graph) leaves
    no violation of that code behind."""
    rng = random.Random(11)
    clean = valid_event_graph(extras=2)
    broken = inject_defect(clean, code, rng)
    assert code in {v.code.value for v in validate(broken, schema).violations}
    assert validate(clean, schema).conforms


def test_oracle_agreement_on_messy_graphs(schema):
    rng = random.Random(99)
    for _ in range(300):
        g = random_messy_graph(rng)
        report = validate(g, schema)
        assert codes_of(report) == oracle_validate_codes(g, schema)
        assert report.conforms == (not oracle_validate_codes(g, schema))


def test_violation_ordering_follows_check_order(schema):
    rng = random.Random(5)
    g = inject_defect(valid_event_graph(extras=2), "DUPLICATE_NODE_ID", rng)
    g = inject_defect(g, "VALUE_NOT_IN_ENUM", rng)
    report = validate(g, schema)
    order = [v.code for v in report.violations]
    assert order.index(ViolationCode.DUPLICATE_NODE_ID) < order.index(
        ViolationCode.VALUE_NOT_IN_ENUM
    )


def test_violation_rate(schema):
    ok = ValidationReport()
    bad = validate(KnowledgeGraph(), schema)
    assert violation_rate([ok, ok, bad, bad]) == 0.5
    assert violation_rate([ok, ok]) == 0.0
    assert violation_rate([bad]) == 1.0
    with pytest.raises(EmptyInput):
        violation_rate([])


def test_report_json_rendering(schema):
    report = validate(KnowledgeGraph(), schema)
    payload = report.to_dict()
    assert payload["conforms"] is False
    assert payload["violations"][0]["code"] == "NOT_EXACTLY_ONE_ANCHOR"
