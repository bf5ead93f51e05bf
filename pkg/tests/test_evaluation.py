import math
import random

import pytest

from ontologx.errors import EmptyInput
from ontologx.evaluation import (
    EventScore,
    MetricsReport,
    aggregate,
    canonical_node_key,
    canonical_triples,
    precision_recall_f1,
    summarize_runs,
)
from ontologx.model import (
    EMPTY_GRAPH,
    GraphNode,
    GraphRelationship,
    KnowledgeGraph,
    NodeProperty,
)
from ontologx.validation import ValidationReport, Violation, ViolationCode

from conftest import random_conforming_graph, random_messy_graph, valid_event_graph
from oracles import oracle_prf1, oracle_triples


def _event(props=(("eventMessage", "x"), ("logLevel", "INFO"))):
    return GraphNode("e", "Event", tuple(NodeProperty(k, v) for k, v in props))


def test_empty_graph_yields_no_triples():
    assert canonical_triples(EMPTY_GRAPH) == set()


def test_event_node_two_property_triples():
    g = KnowledgeGraph((_event(),), ())
    triples = canonical_triples(g)
    assert len(triples) == 2
    assert {t.predicate for t in triples} == {"eventMessage", "logLevel"}


def test_identical_nodes_merge():
    twin_a = GraphNode("a", "File", (NodeProperty("fileName", "f"),))
    twin_b = GraphNode("b", "File", (NodeProperty("fileName", "f"),))
    g = KnowledgeGraph(
        (_event(), twin_a, twin_b),
        (GraphRelationship("e", "a", "hasFile"), GraphRelationship("e", "b", "hasFile")),
    )
    assert canonical_node_key(twin_a) == canonical_node_key(twin_b)
    triples = canonical_triples(g)
    # 2 event props + 1 merged file prop + 1 merged relationship
    assert len(triples) == 4


def test_normalisation_trims_and_nfc():
    a = GraphNode("a", "File", (NodeProperty("fileName", "  café  "),))
    b = GraphNode("b", "File", (NodeProperty("fileName", "café"),))
    assert canonical_node_key(a) == canonical_node_key(b)


def test_worked_example():
    shared_event = _event()
    generated = KnowledgeGraph(
        (shared_event, GraphNode("f", "File", ())),
        (GraphRelationship("e", "f", "hasFile"),),
    )
    gold = KnowledgeGraph(
        (shared_event, GraphNode("n", "NetworkAddress", (NodeProperty("addressIP", "1.2.3.4"),))),
        (GraphRelationship("e", "n", "hasNetworkAddress"),),
    )
    assert len(canonical_triples(generated)) == 3
    assert len(canonical_triples(gold)) == 4
    p, r, f1 = precision_recall_f1(generated, gold)
    assert abs(p - 2 / 3) < 1e-9
    assert abs(r - 0.5) < 1e-9
    assert abs(f1 - 4 / 7) < 1e-9


def test_identity_scores_one():
    g = valid_event_graph(extras=3)
    assert precision_recall_f1(g, g) == (1.0, 1.0, 1.0)


def test_empty_generated_scores_zero():
    assert precision_recall_f1(EMPTY_GRAPH, valid_event_graph()) == (0.0, 0.0, 0.0)


def test_oracle_agreement_random_pairs():
    rng = random.Random(21)
    for _ in range(300):
        a = random_messy_graph(rng) if rng.random() < 0.5 else random_conforming_graph(rng)
        b = random_messy_graph(rng) if rng.random() < 0.5 else random_conforming_graph(rng)
        assert precision_recall_f1(a, b) == oracle_prf1(a, b)
        assert {tuple(t) for t in canonical_triples(a)} == oracle_triples(a)


def test_scores_bounded_and_f1_zero_iff_disjoint():
    rng = random.Random(8)
    for _ in range(100):
        a, b = random_messy_graph(rng), random_messy_graph(rng)
        p, r, f1 = precision_recall_f1(a, b)
        assert 0.0 <= p <= 1.0 and 0.0 <= r <= 1.0 and 0.0 <= f1 <= 1.0
        disjoint = not (canonical_triples(a) & canonical_triples(b))
        assert (f1 == 0.0) == disjoint


def test_aggregate_macro_average():
    scores = [EventScore("a", 0.5, 0.3, 0.4), EventScore("b", 0.7, 0.9, 0.8)]
    report = aggregate(scores)
    assert report.f1 == pytest.approx(0.6)
    assert report.precision == pytest.approx(0.6)
    assert report.shacl_violation_rate == 0.0
    assert len(report.per_event) == 2


def test_aggregate_includes_violation_rate():
    bad = ValidationReport(
        violations=(Violation(ViolationCode.NOT_EXACTLY_ONE_ANCHOR, "graph", "no anchor"),)
    )
    report = aggregate([EventScore("a", 1, 1, 1)], [ValidationReport(), bad])
    assert report.shacl_violation_rate == 0.5


def test_aggregate_empty_input():
    with pytest.raises(EmptyInput):
        aggregate([])


def _fixed_report(p, r, f1, rate=0.0):
    return MetricsReport(precision=p, recall=r, f1=f1, shacl_violation_rate=rate)


def test_identical_runs_have_zero_sd():
    runs = [_fixed_report(0.8, 0.6, 0.7)] * 5
    summary = summarize_runs(runs)
    assert summary.mean["f1"] == pytest.approx(0.7)
    assert summary.sd["f1"] == 0.0


def test_runs_summary_matches_spreadsheet_oracle():
    f1_values = [i / 10 for i in range(10)]  # 0.0 .. 0.9
    runs = [_fixed_report(0.5, 0.5, v, rate=v / 2) for v in f1_values]
    summary = summarize_runs(runs)
    mean = sum(f1_values) / 10
    sd = math.sqrt(sum((v - mean) ** 2 for v in f1_values) / 10)
    assert summary.mean["f1"] == pytest.approx(mean, abs=1e-12)
    assert summary.sd["f1"] == pytest.approx(sd, abs=1e-12)
    assert summary.mean["f1"] == pytest.approx(0.45)
    assert summary.sd["f1"] == pytest.approx(0.2872281323269014, abs=1e-12)


def test_runs_summary_csv():
    summary = summarize_runs([_fixed_report(1.0, 0.5, 2 / 3, rate=0.25)])
    text = summary.to_csv()
    lines = text.strip().splitlines()
    assert lines[0].startswith("n_runs,precision_mean,precision_sd")
    assert lines[1].startswith("1,1.000000,0.000000,0.500000")
    assert "0.666667" in lines[1]


def test_summarize_runs_empty():
    with pytest.raises(EmptyInput):
        summarize_runs([])


def test_metrics_report_json_reserves_judge_score():
    report = _fixed_report(1, 1, 1)
    assert report.to_dict()["judge_score"] is None
