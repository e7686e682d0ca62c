from __future__ import annotations

import io

import pytest

from skg.canonical import loads_document
from skg.rules import is_consistent
from skg.synth.client import ScriptedLlmClient
from skg.synth.loop import LoopConfig, TraceWriter, call_refine, run_batch, run_loop
from skg.synth.mock import DeterministicLlmClient, make_bundle, make_bundle_text
from skg.synth.templates import default_templates
from skg.synth.verify import VerificationReport
from skg.synthetic import synthetic_cases
from skg.validate import validate_graph

TEMPLATES = default_templates()


def test_clean_first_verify_finals_at_k0(sample_case, rules):
    client = DeterministicLlmClient(sample_case, variety_seed=42)
    outcome = run_loop(sample_case, TEMPLATES, rules, client, LoopConfig())
    assert outcome.is_final
    assert outcome.bundle.iteration == 0
    assert len(outcome.bundles) == 1
    assert len(outcome.reports) == 1
    generation_records = [r for r in outcome.trace if r.stage in ("generate", "refine")]
    assert len(generation_records) == 1


def test_defect_fixed_at_k1(sample_case, rules):
    client = DeterministicLlmClient(sample_case, defect_rounds=1, variety_seed=42)
    outcome = run_loop(sample_case, TEMPLATES, rules, client, LoopConfig())
    assert outcome.is_final
    assert outcome.bundle.iteration == 1
    assert len(outcome.bundles) == 2
    assert [len(r.blocking) > 0 for r in outcome.reports] == [True, False]


def test_never_fixed_escalates_with_full_trace(sample_case, rules):
    client = DeterministicLlmClient(sample_case, defect_rounds=99, variety_seed=42)
    outcome = run_loop(sample_case, TEMPLATES, rules, client, LoopConfig(k_max=3))
    assert not outcome.is_final
    assert len(outcome.bundles) == 3  # generate + two refines
    assert len(outcome.reports) == 3
    assert outcome.error


def test_final_outcomes_satisfy_loop_invariant(rules):
    for case in synthetic_cases(10, seed=77):
        outcome = run_loop(
            case, TEMPLATES, rules, DeterministicLlmClient(case, variety_seed=77), LoopConfig()
        )
        assert outcome.is_final
        graph = outcome.bundle.graph
        assert validate_graph(graph).ok
        assert is_consistent(graph, rules)
        assert all(not r.blocking for r in outcome.reports[-1:])


def test_parse_failure_escalates_with_raw_text(sample_case, rules):
    client = ScriptedLlmClient(responses=["no payload here, sorry"])
    outcome = run_loop(sample_case, TEMPLATES, rules, client, LoopConfig())
    assert not outcome.is_final
    assert "generate" in outcome.error
    assert outcome.trace[0].parsed_ok is False
    assert outcome.trace[0].raw_response == "no payload here, sorry"


def test_transport_failure_escalates(sample_case, rules):
    client = ScriptedLlmClient(responses=[])  # raises TransportError immediately
    outcome = run_loop(sample_case, TEMPLATES, rules, client, LoopConfig())
    assert not outcome.is_final


def test_refine_requires_blocking_finding(sample_case, rules):
    bundle = make_bundle(sample_case, variety_seed=42)
    clean = VerificationReport(iteration=0, findings=())
    with pytest.raises(ValueError):
        call_refine(sample_case, bundle, clean, TEMPLATES["refine"], ScriptedLlmClient([]))


def test_skip_verification_returns_generation_unchecked(sample_case, rules):
    client = DeterministicLlmClient(sample_case, defect_rounds=99, variety_seed=42)
    outcome = run_loop(
        sample_case, TEMPLATES, rules, client, LoopConfig(skip_verification=True)
    )
    assert outcome.is_final
    assert outcome.reports == ()


def test_skip_graph_produces_graphless_finals(sample_case, rules):
    client = DeterministicLlmClient(sample_case, skip_graph=True, variety_seed=42)
    outcome = run_loop(sample_case, TEMPLATES, rules, client, LoopConfig(skip_graph=True))
    assert outcome.is_final
    assert outcome.bundle.graph is None
    assert outcome.bundle.description.text
    assert outcome.bundle.qa


def test_batch_conserves_cases(rules):
    cases = synthetic_cases(30, seed=55)

    def client_for(case):
        # every third case never repairs its defect
        idx = int(case.case_id.rsplit("-", 1)[1])
        return DeterministicLlmClient(
            case, defect_rounds=99 if idx % 3 == 0 else 0, variety_seed=55
        )

    outcomes = run_batch(cases, TEMPLATES, rules, client_for, LoopConfig(), workers=4)
    assert len(outcomes) == len(cases)
    finals = [o for o in outcomes if o.is_final]
    escalated = [o for o in outcomes if not o.is_final]
    assert len(finals) + len(escalated) == len(cases)
    assert len(escalated) == 10
    assert {o.case_id for o in outcomes} == {c.case_id for c in cases}


def test_trace_writer_emits_one_record_per_line(sample_case, rules):
    sink = io.StringIO()
    writer = TraceWriter(sink)
    client = DeterministicLlmClient(sample_case, defect_rounds=1, variety_seed=42)
    outcome = run_loop(sample_case, TEMPLATES, rules, client, LoopConfig())
    writer.write(outcome.trace)
    lines = [l for l in sink.getvalue().splitlines() if l]
    assert len(lines) == len(outcome.trace)
    docs = [loads_document(l) for l in lines]
    assert {d["case_id"] for d in docs} == {sample_case.case_id}
    stages = [d["stage"] for d in docs]
    assert stages == ["generate", "verify", "refine", "verify"]
    for doc in docs:
        assert set(doc) == {
            "case_id", "stage", "iteration", "prompt_digest", "raw_response",
            "parsed_ok", "findings_count", "retries", "started_at", "finished_at",
        }


def test_raw_responses_retained_verbatim(sample_case, rules):
    expected = make_bundle_text(sample_case, variety_seed=42)
    client = DeterministicLlmClient(sample_case, variety_seed=42)
    outcome = run_loop(sample_case, TEMPLATES, rules, client, LoopConfig())
    generate_record = outcome.trace[0]
    assert generate_record.raw_response == expected


def test_non_early_stop_runs_terminal_verify(sample_case, rules):
    client = DeterministicLlmClient(sample_case, variety_seed=42)
    outcome = run_loop(
        sample_case, TEMPLATES, rules, client, LoopConfig(k_max=2, early_stop=False)
    )
    assert outcome.is_final
    assert len(outcome.reports) == 2  # verified every round despite being clean
    assert len(outcome.bundles) == 1
