from __future__ import annotations

import math
from collections import Counter
from dataclasses import replace

import pytest

from skg.canonical import canonical_content, content_equal
from skg.diff import SetAttribute, SetDim, apply_edit_log
from skg.model import CouplingClass, NodeKind
from skg.partition import classify
from skg.rules import (
    EditRequest,
    IdenticalVariant,
    InsufficientVariation,
    UnsatisfiableEdit,
    admissible_requests,
    closure,
    generalize,
    is_consistent,
    sample_edits,
)
from skg.rules.edits import seed_edits
from skg.validate import validate_graph
from tests.conftest import graphs_for_sweep


def test_closure_keeps_consistent_seed_unchanged(refund_graph, rules):
    seed = (SetAttribute("node", "st-order", "merchant_response", "accepted"),)
    assert closure(refund_graph, rules, seed) == seed


def test_closure_reroutes_payout_without_evidence(refund_graph, rules):
    # forcing every evidence item to insufficient breaks the refund rule
    seed = tuple(
        SetAttribute("node", n.node_id, "validity", "insufficient")
        for n in refund_graph.nodes_of_kind(NodeKind.EVIDENCE)
    ) + (SetDim("evidence_quality", "insufficient"),)
    log = closure(refund_graph, rules, seed)
    extras = log[len(seed) :]
    assert SetAttribute("node", "dec-final", "action", "ManualReview") in extras
    repaired = apply_edit_log(log, refund_graph)
    assert is_consistent(repaired, rules)


def test_closure_prunes_late_events(refund_graph, rules):
    seed = (
        SetDim("service_stage", "pre_delivery"),
        SetAttribute("node", "st-order", "service_stage", "pre_delivery"),
    )
    log = closure(refund_graph, rules, seed)
    repaired = apply_edit_log(log, refund_graph)
    assert is_consistent(repaired, rules)
    # the two post_delivery events are gone, the pre_sale one survives
    remaining = {n.node_id for n in repaired.nodes_of_kind(NodeKind.EVENT)}
    assert remaining == {"evt-0"}


def test_closure_escalates_when_required_policy_flips(refund_graph, rules):
    seed = (SetAttribute("node", "pol-refund-7d", "applies", False),)
    log = closure(refund_graph, rules, seed)
    repaired = apply_edit_log(log, refund_graph)
    assert is_consistent(repaired, rules)
    assert repaired.final_decision().attr("action") == "Reject"  # no contested evidence


def test_closure_never_edits_weak_nodes(rules):
    node_edits = (SetAttribute, type(None))
    for graph in graphs_for_sweep(20, seed=41):
        coupling = classify(graph)
        for dim, value in admissible_requests(graph)[:4]:
            try:
                _, log = generalize(graph, rules, EditRequest(dim, value))
            except (UnsatisfiableEdit, IdenticalVariant):
                continue
            seed = seed_edits(graph, EditRequest(dim, value))
            for op in log[len(seed) :]:
                if isinstance(op, SetAttribute) and op.target == "node":
                    assert coupling[op.target_id] == CouplingClass.STRONG, (dim, value, op)


def test_closure_budget_exhaustion_raises(refund_graph, rules):
    # an unrepairable seed: Reject with no grounds at all
    seed = (
        SetAttribute("node", "dec-final", "action", "Reject"),
        SetDim("resolution_action", "Reject"),
    )
    with pytest.raises(UnsatisfiableEdit):
        closure(refund_graph, rules, seed)


def test_generalize_service_stage_fixture(refund_graph, rules):
    variant, log = generalize(refund_graph, rules, EditRequest("service_stage", "pre_delivery"))
    assert validate_graph(variant).ok
    assert is_consistent(variant, rules)
    assert variant.dim("service_stage") == "pre_delivery"
    assert variant.provenance.kind == "generalized"
    assert variant.provenance.parent_graph_id == refund_graph.graph_id
    assert len(variant.provenance.edit_log) == len(log)
    # delivery-stage events were pruned as part of the coordinated edit
    assert {n.node_id for n in variant.nodes_of_kind(NodeKind.EVENT)} == {"evt-0"}


def test_generalize_deterministic(refund_graph, rules):
    request = EditRequest("responsibility", "platform", rng_seed=7)
    a, log_a = generalize(refund_graph, rules, request)
    b, log_b = generalize(refund_graph, rules, request)
    assert canonical_content(a) == canonical_content(b)
    assert a.graph_id == b.graph_id
    assert log_a == log_b


def test_generalize_rejects_current_value(refund_graph, rules):
    with pytest.raises(IdenticalVariant):
        generalize(refund_graph, rules, EditRequest("service_stage", "post_delivery"))


def test_generalize_rejects_cancelled_out_edit(refund_graph, rules):
    # asking an insufficient-evidence graph for a Refund decision snaps back
    downgraded, _ = generalize(refund_graph, rules, EditRequest("evidence_validity", "insufficient"))
    with pytest.raises((IdenticalVariant, UnsatisfiableEdit)):
        generalize(downgraded, rules, EditRequest("resolution_action", "Refund"))


def test_generalize_replay_matches_variant(refund_graph, rules):
    for dim, value in admissible_requests(refund_graph)[:10]:
        try:
            variant, log = generalize(refund_graph, rules, EditRequest(dim, value))
        except (UnsatisfiableEdit, IdenticalVariant):
            continue
        assert content_equal(apply_edit_log(log, refund_graph), variant)


def test_sample_edits_forced_choice(refund_graph, rules):
    pool = admissible_requests(refund_graph)
    requests = sample_edits(refund_graph, rules, len(pool), seed=3)
    assert sorted((r.dimension, r.value) for r in requests) == pool


def test_sample_edits_pairwise_distinct(refund_graph, rules):
    requests = sample_edits(refund_graph, rules, 8, seed=11)
    assert len({(r.dimension, r.value) for r in requests}) == 8


def test_sample_edits_deterministic(refund_graph, rules):
    a = sample_edits(refund_graph, rules, 6, seed=5)
    b = sample_edits(refund_graph, rules, 6, seed=5)
    assert a == b
    c = sample_edits(refund_graph, rules, 6, seed=6)
    assert a != c


def test_sample_edits_insufficient_variation(refund_graph, rules):
    with pytest.raises(InsufficientVariation):
        sample_edits(refund_graph, rules, 10_000, seed=0)


def test_sample_edits_uniform_over_dimensions(refund_graph, rules):
    dims = sorted({d for d, _ in admissible_requests(refund_graph)})
    counts = Counter()
    draws = 10_000
    for i in range(draws):
        req = sample_edits(refund_graph, rules, 1, seed=i)[0]
        counts[req.dimension] += 1
    expected = draws / len(dims)
    sigma = math.sqrt(draws * (1 / len(dims)) * (1 - 1 / len(dims)))
    for dim in dims:
        assert abs(counts[dim] - expected) <= 3 * sigma, (dim, counts[dim], expected)


def test_evidence_validity_edit_sets_quality_dim(refund_graph, rules):
    variant, _ = generalize(refund_graph, rules, EditRequest("evidence_validity", "contested"))
    assert variant.dim("evidence_quality") == "partial"
    validities = {n.attr("validity") for n in variant.nodes_of_kind(NodeKind.EVIDENCE)}
    assert validities == {"contested"}
    # contested evidence forces the payout decision away from Refund
    assert variant.final_decision().attr("action") != "Refund"


def test_event_relation_edit_retypes_one_edge(refund_graph, rules):
    variant, _ = generalize(refund_graph, rules, EditRequest("event_relation", "occurs_during"))
    relations = [e.relation.value for e in variant.edges if e.src.startswith("evt")]
    assert "occurs_during" in relations
