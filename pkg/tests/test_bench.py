from __future__ import annotations

import io

from skg.canonical import read_lines, write_lines
from skg.corpus.bench import (
    Emission,
    build_cfpb_bench,
    build_mm_bench,
    build_text_bench,
    record_from_doc,
    record_to_doc,
)
from skg.corpus.describe import render_scene_description
from skg.corpus.qa import sample_qa_items
from skg.evaluation.splits import SplitAssignment
from skg.synthetic import build_graph, synthetic_case

SPLITTER = SplitAssignment(seed=17)


def _emissions(count: int, seed: int = 81):
    out = []
    for i in range(count):
        case = synthetic_case(i, seed=seed)
        graph = build_graph(case, variety_seed=seed)
        out.append(
            Emission(
                case=case,
                graph=graph,
                description=render_scene_description(graph),
                qa=tuple(sample_qa_items(graph, seed=seed)),
            )
        )
    return out


def test_text_records_have_description_only():
    emissions = _emissions(6)
    records = list(build_text_bench(emissions, SPLITTER))
    assert records
    for record in records:
        assert record.benchmark == "ComplaintScene-Text"
        assert set(record.inputs) == {"description"}
        assert record.qa.subtask in ("evidence", "policy", "action")
        assert record.complaint_type


def test_mm_records_carry_asset_refs():
    emissions = _emissions(6)
    records = list(build_mm_bench(emissions, SPLITTER))
    assert records
    for record in records:
        assert record.benchmark == "ComplaintScene-MM"
        assert len(record.inputs["asset_refs"]) >= 1
        case = next(e.case for e in emissions if e.base_case_id == record.base_case_id)
        hashes = {a.integrity_hash for a in case.evidence_assets}
        assert set(record.inputs["asset_refs"]) == hashes
        assert record.qa.subtask in ("routing", "responsibility", "resolution")


def test_zero_emissions_zero_records():
    assert list(build_text_bench([], SPLITTER)) == []
    assert list(build_mm_bench([], SPLITTER)) == []


def test_split_matches_recomputation():
    emissions = _emissions(10)
    for record in build_text_bench(emissions, SPLITTER):
        assert record.split == SPLITTER(record.base_case_id)
    for record in build_mm_bench(emissions, SPLITTER):
        assert record.split == SPLITTER(record.base_case_id)


def test_paired_records_share_golds():
    # same graph, same subtask -> same gold option, whichever bench carries it
    from skg.corpus.qa import build_qa

    for emission in _emissions(8):
        text_gold = build_qa(emission.graph, "action", rng_seed=3).gold_option
        mm_gold = build_qa(emission.graph, "resolution", rng_seed=3).gold_option
        assert text_gold == mm_gold


def test_records_round_trip_via_line_stream():
    emissions = _emissions(4)
    records = list(build_text_bench(emissions, SPLITTER)) + list(
        build_mm_bench(emissions, SPLITTER)
    )
    sink = io.StringIO()
    write_lines(sink, (record_to_doc(r) for r in records))
    sink.seek(0)
    again = [record_from_doc(doc) for doc in read_lines(sink)]
    assert again == records


def test_cfpb_labels_pass_through_byte_exact():
    case = synthetic_case(0, seed=5)
    triples = [(case, "Credit card", "Billing disputes — fee")]
    product_records = list(build_cfpb_bench(triples, SPLITTER, "product"))
    issue_records = list(build_cfpb_bench(triples, SPLITTER, "issue"))
    assert product_records[0].label == "Credit card"
    assert product_records[0].benchmark == "CFPB-Product"
    assert issue_records[0].label == "Billing disputes — fee"
    assert issue_records[0].inputs == {"narrative": case.narrative}
