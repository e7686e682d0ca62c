"""Acceptance gate: one test per release criterion, at the stated tolerance.

Every test prints a single `ACCEPTANCE PASS/FAIL` line (visible with
pytest -s or in captured output) and enforces its runtime budget. All
criteria run fully offline: scripted model clients and replay mode only.
"""

from __future__ import annotations

import json
import socket
import threading
import time
from contextlib import contextmanager
from decimal import Decimal
from fractions import Fraction
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@contextmanager
def criterion(name: str, budget_seconds: float):
    started = time.monotonic()
    try:
        yield
    except BaseException:
        elapsed = time.monotonic() - started
        print(f"ACCEPTANCE FAIL  {name}  ({elapsed:.2f}s)")
        raise
    elapsed = time.monotonic() - started
    print(f"ACCEPTANCE PASS  {name}  ({elapsed:.2f}s)")
    assert elapsed < budget_seconds, f"{name} exceeded its {budget_seconds}s budget: {elapsed:.2f}s"


# ---------------------------------------------------------------------------
# 1. metric oracle against the published table rows

TEXT_ROWS = [
    # (evidence, policy, action, published average)
    ("54.18", "49.87", "68.21", "57.42"),
    ("61.02", "58.64", "76.27", "65.31"),
    ("68.95", "65.74", "79.75", "71.48"),
    ("66.41", "61.27", "81.81", "69.83"),
    ("73.24", "69.11", "87.39", "76.58"),
    ("75.88", "72.36", "89.18", "79.14"),
    ("71.95", "66.84", "85.07", "74.62"),
    ("78.69", "74.81", "90.79", "81.43"),
    ("80.55", "76.92", "92.31", "83.26"),
]

MM_ROWS = [
    # (routing, responsibility, resolution, published average)
    ("72.46", "74.88", "81.02", "76.12"),
    ("74.31", "81.29", "86.03", "80.54"),
    ("76.92", "79.15", "85.22", "80.43"),
    ("78.14", "84.76", "87.93", "83.61"),
    ("78.92", "79.87", "83.86", "80.88"),
    ("78.65", "81.44", "86.42", "82.17"),
    ("79.26", "86.03", "88.16", "84.48"),
]


def test_metric_oracle_reproduces_published_averages():
    from skg.evaluation.metrics import avg_mm, avg_text

    with criterion("metric oracle vs published table (9 text + 7 mm rows)", 1.0):
        tolerance = Fraction(5, 1000)
        for a, b, c, published in TEXT_ROWS:
            assert abs(avg_text(a, b, c) - Fraction(published)) <= tolerance, (a, b, c)
        for a, b, c, published in MM_ROWS:
            assert abs(avg_mm(a, b, c) - Fraction(published)) <= tolerance, (a, b, c)


# ---------------------------------------------------------------------------
# 2. generalization soundness sweep


def test_generalization_soundness_sweep():
    from skg.canonical import content_equal
    from skg.diff import apply_edit_log
    from skg.rules import (
        EditRequest,
        IdenticalVariant,
        UnsatisfiableEdit,
        admissible_requests,
        default_rules,
        is_consistent,
    )
    from skg.rules.edits import generalize
    from skg.synthetic import build_graph, synthetic_case
    from skg.validate import validate_graph

    rules = default_rules()
    graphs = [build_graph(synthetic_case(i, seed=2025), variety_seed=2025) for i in range(25)]

    with criterion("generalization soundness: 1,000 seeded calls over 25 graphs", 30.0):
        calls = successes = 0
        round_no = 0
        while calls < 1000:
            for graph in graphs:
                for dim, value in admissible_requests(graph):
                    if calls >= 1000 + 25:  # finish the row, stay near 1k
                        break
                    calls += 1
                    request = EditRequest(dim, value, rng_seed=round_no)
                    try:
                        variant, log = generalize(graph, rules, request)
                    except (UnsatisfiableEdit, IdenticalVariant):
                        continue
                    successes += 1
                    assert validate_graph(variant).ok, (graph.graph_id, request)
                    assert is_consistent(variant, rules), (graph.graph_id, request)
                    assert content_equal(apply_edit_log(log, graph), variant), (
                        graph.graph_id,
                        request,
                    )
                    assert variant.provenance.parent_graph_id == graph.graph_id
                    assert tuple(variant.provenance.edit_log) == tuple(log)
            round_no += 1
        assert calls >= 1000
        assert successes >= 0.7 * calls, f"only {successes}/{calls} variants succeeded"


# ---------------------------------------------------------------------------
# 3. round-trip and mutation fuzz


def _damaging_mutations(payload_text: str, bundle_doc: dict):
    """Mutation classes guaranteed to damage a well-formed payload."""
    yield "", "empty response"
    clone = json.loads(payload_text)
    clone.pop("graph")
    yield json.dumps(clone), "graph deleted"
    clone = json.loads(payload_text)
    clone.pop("description")
    yield json.dumps(clone), "description deleted"
    clone = json.loads(payload_text)
    clone.pop("qa")
    yield json.dumps(clone), "qa deleted"
    assert '"kind": "Evidence"' in payload_text or '"kind":"Evidence"' in payload_text
    yield payload_text.replace('"kind":"Evidence"', '"kind":"Rumor"', 1).replace(
        '"kind": "Evidence"', '"kind": "Rumor"', 1
    ), "node kind corrupted"
    yield payload_text.replace('"relation":"', '"relation":"owns_', 1).replace(
        '"relation": "', '"relation": "owns_', 1
    ), "relation corrupted"
    clone = json.loads(payload_text)
    clone["qa"][0]["gold_index"] = 99
    yield json.dumps(clone), "gold index out of range"
    clone = json.loads(payload_text)
    clone["description"]["graph_id"] = "mismatched-graph"
    yield json.dumps(clone), "description graph id mismatch"
    yield payload_text[: len(payload_text) // 2], "payload truncated"
    clone = json.loads(payload_text)
    clone["qa"][0].pop("options")
    yield json.dumps(clone), "qa options deleted"


def test_round_trip_and_mutation_fuzz():
    from skg.canonical import canonical_text, canonicalize, parse_graph
    from skg.errors import SkgError
    from skg.synth.bundle import BundleParseError, bundle_to_doc, parse_bundle
    from skg.synth.mock import make_bundle
    from skg.synthetic import build_graph, synthetic_case

    with criterion("round-trip fuzz: 1,000 graphs + 500 mutated payloads", 30.0):
        for i in range(1000):
            graph = build_graph(synthetic_case(i, seed=4096), variety_seed=4096)
            blob = canonicalize(graph)
            assert canonicalize(parse_graph(blob)) == blob, f"graph {i} not byte-stable"

        mutations_checked = 0
        case_index = 0
        while mutations_checked < 500:
            case = synthetic_case(case_index, seed=777)
            case_index += 1
            bundle = make_bundle(case, variety_seed=777)
            doc = bundle_to_doc(bundle)
            payload_text = canonical_text(doc)
            for mutated, label in _damaging_mutations(payload_text, doc):
                text = f"```skg-bundle\n{mutated}\n```" if mutated else "no payload at all"
                try:
                    parse_bundle(text, 0)
                except BundleParseError:
                    pass  # the typed error family we demand
                except SkgError as exc:  # anything else typed is still a bug here
                    raise AssertionError(f"untyped-for-parse error on {label}: {exc!r}")
                else:
                    raise AssertionError(f"silent acceptance of mutation: {label}")
                mutations_checked += 1
        assert mutations_checked >= 500


# ---------------------------------------------------------------------------
# 4. loop contract with the scripted model


def test_loop_contract_with_scripted_model():
    from skg.rules import default_rules
    from skg.synth.loop import LoopConfig, run_batch, run_loop
    from skg.synth.mock import DeterministicLlmClient
    from skg.synth.templates import default_templates
    from skg.synthetic import synthetic_case, synthetic_cases

    rules = default_rules()
    templates = default_templates()

    with criterion("loop contract: early stop, one repair, exhaustion, batch conservation", 10.0):
        case = synthetic_case(0, seed=512)

        outcome = run_loop(case, templates, rules, DeterministicLlmClient(case, variety_seed=512))
        assert outcome.is_final and outcome.bundle.iteration == 0
        assert len(outcome.bundles) == 1

        outcome = run_loop(
            case,
            templates,
            rules,
            DeterministicLlmClient(case, defect_rounds=1, variety_seed=512),
        )
        assert outcome.is_final and outcome.bundle.iteration == 1

        outcome = run_loop(
            case,
            templates,
            rules,
            DeterministicLlmClient(case, defect_rounds=99, variety_seed=512),
            LoopConfig(k_max=3),
        )
        assert not outcome.is_final
        assert len(outcome.bundles) == 3
        assert len(outcome.reports) == 3

        cases = synthetic_cases(100, seed=513)

        def client_for(case):
            idx = int(case.case_id.rsplit("-", 1)[1])
            return DeterministicLlmClient(
                case, defect_rounds=99 if idx % 5 == 0 else idx % 2, variety_seed=513
            )

        outcomes = run_batch(cases, templates, rules, client_for, LoopConfig(), workers=8)
        finals = sum(1 for o in outcomes if o.is_final)
        escalated = sum(1 for o in outcomes if not o.is_final)
        assert finals + escalated == 100
        assert escalated == 20


# ---------------------------------------------------------------------------
# 5. split leakage at corpus scale


def test_split_leakage_at_scale():
    from skg.evaluation.splits import SplitAssignment

    with criterion("leakage: 10,000 base cases x ~8 variants, 80/10/10 within 0.5pp", 60.0):
        splitter = SplitAssignment(ratios={"train": 0.8, "dev": 0.1, "test": 0.1}, seed=0)
        base_ids = [f"syn-0000-{i:06d}" for i in range(10_000)]
        base_split = {}
        counts = {"train": 0, "dev": 0, "test": 0}
        for base_id in base_ids:
            split = splitter(base_id)
            base_split[base_id] = split
            counts[split] += 1
        # the expanded corpus: ~8 variant records per base, split recomputed per record
        leaks = 0
        records = 0
        for base_id in base_ids:
            for v in range(8):
                records += 1
                if splitter(base_id) != base_split[base_id]:
                    leaks += 1
        assert records == 80_000
        assert leaks == 0
        for name, want in (("train", 0.8), ("dev", 0.1), ("test", 0.1)):
            got = counts[name] / len(base_ids)
            assert abs(got - want) <= 0.005, f"{name}: {got:.4f} vs {want}"


# ---------------------------------------------------------------------------
# 6. corruption protocol


def test_corruption_protocol():
    from skg.canonical import canonicalize_case
    from skg.corpus.corrupt import CorruptionSpec, corrupt_evidence
    from skg.synthetic import synthetic_cases

    with criterion("corruption: nesting, identity at level 0, bit-identical reruns", 10.0):
        cases = synthetic_cases(200, seed=314)
        seed = 11
        for case in cases:
            zero = corrupt_evidence(case, CorruptionSpec(level=0.0, seed=seed))
            assert canonicalize_case(zero) == canonicalize_case(case)
            ten = corrupt_evidence(case, CorruptionSpec(level=0.10, seed=seed))
            thirty = corrupt_evidence(case, CorruptionSpec(level=0.30, seed=seed))
            kept_10 = {a.asset_id for a in ten.evidence_assets}
            kept_30 = {a.asset_id for a in thirty.evidence_assets}
            all_ids = {a.asset_id for a in case.evidence_assets}
            assert (all_ids - kept_10) <= (all_ids - kept_30)
            again_10 = corrupt_evidence(case, CorruptionSpec(level=0.10, seed=seed))
            again_30 = corrupt_evidence(case, CorruptionSpec(level=0.30, seed=seed))
            assert canonicalize_case(again_10) == canonicalize_case(ten)
            assert canonicalize_case(again_30) == canonicalize_case(thirty)


# ---------------------------------------------------------------------------
# 7. policy-consistency oracle


def test_policy_consistency_oracle():
    from skg.canonical import parse_graph
    from skg.evaluation.consistency import Prediction, policy_consistency
    from skg.rules import default_rules, is_consistent

    rules = default_rules()

    with criterion("policy consistency: hand table 0.6 exact, all-gold 1.0", 5.0):
        expected = json.loads((FIXTURES / "pc_suite" / "expected.json").read_text())
        graphs = {
            pc_id: parse_graph((FIXTURES / "pc_suite" / f"{pc_id}.skg").read_bytes())
            for pc_id in expected["is_consistent"]
        }
        for pc_id, want in expected["is_consistent"].items():
            assert is_consistent(graphs[pc_id], rules) is want, pc_id

        predictions, table = [], {}
        for i, row in enumerate(expected["pc_predictions"]):
            predictions.append(
                Prediction(record_id=f"r{i}", predicted_action=row["predicted_action"])
            )
            table[f"r{i}"] = graphs[row["graph"]]
        assert policy_consistency(predictions, table, rules) == Fraction(3, 5)

        gold_preds, gold_table = [], {}
        for i, (pc_id, ok) in enumerate(expected["is_consistent"].items()):
            if not ok:
                continue
            graph = graphs[pc_id]
            gold_preds.append(
                Prediction(
                    record_id=f"g{i}", predicted_action=graph.final_decision().attr("action")
                )
            )
            gold_table[f"g{i}"] = graph
        assert policy_consistency(gold_preds, gold_table, rules) == 1


# ---------------------------------------------------------------------------
# 8. review workflow end to end over HTTP


def _free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


def test_review_workflow_over_http(tmp_path):
    import requests
    import uvicorn

    from skg.canonical import canonicalize_case
    from skg.model import NodeKind
    from skg.review.service import create_app
    from skg.review.store import ContentStore
    from skg.review.tasks import ReviewQueue
    from skg.rules import default_rules
    from skg.synth.loop import LoopConfig, run_loop
    from skg.synth.mock import DeterministicLlmClient
    from skg.synth.templates import default_templates
    from skg.synthetic import synthetic_case

    rules = default_rules()

    with criterion("review workflow over HTTP: escalate, edit, approve, finalize, audit", 10.0):
        # an escalated synthesis outcome provides the graph under review
        case = synthetic_case(2, seed=640)
        outcome = run_loop(
            case,
            default_templates(),
            rules,
            DeterministicLlmClient(case, defect_rounds=99, variety_seed=640),
            LoopConfig(k_max=2),
        )
        assert not outcome.is_final
        defective_graph = outcome.bundles[-1].graph

        store = ContentStore(tmp_path / "store")
        queue = ReviewQueue(store, rules)
        store.put(canonicalize_case(case), "case", refs=[case.case_id])
        queue.put_graph(defective_graph)
        task = queue.enqueue_task(case.case_id, defective_graph.graph_id, "annotator")

        tokens = {
            "tok-ann": {"reviewer_id": "ann1", "role": "annotator"},
            "tok-sen": {"reviewer_id": "sen1", "role": "senior"},
        }
        app = create_app(store, rules, tokens, queue=queue)
        port = _free_port()
        config = uvicorn.Config(app, host="127.0.0.1", port=port, log_level="error")
        server = uvicorn.Server(config)
        thread = threading.Thread(target=server.run, daemon=True)
        thread.start()
        base = f"http://127.0.0.1:{port}/api/v1"
        for _ in range(100):
            if server.started:
                break
            time.sleep(0.05)
        assert server.started

        try:
            ann = {"Authorization": "Bearer tok-ann"}
            sen = {"Authorization": "Bearer tok-sen"}

            body = requests.get(f"{base}/tasks?status=pending", headers=ann).json()
            assert [t["task_id"] for t in body["tasks"]] == [task.task_id]

            resp = requests.post(
                f"{base}/tasks/{task.task_id}/claim", headers=ann, json={"reviewer_id": "ann1"}
            )
            assert resp.status_code == 200

            # an edit that breaks the blocking rules must be rejected with findings
            evidence_ids = [
                n.node_id for n in defective_graph.nodes_of_kind(NodeKind.EVIDENCE)
            ]
            bad_edit = [
                {"op": "set_attribute", "target": "node", "target_id": "dec-final",
                 "key": "action", "value": "Refund"},
                {"op": "set_dim", "dim": "resolution_action", "value": "Refund"},
            ] + [
                {"op": "set_attribute", "target": "node", "target_id": nid,
                 "key": "validity", "value": "insufficient"}
                for nid in evidence_ids
            ]
            resp = requests.post(
                f"{base}/tasks/{task.task_id}/decision",
                headers=ann,
                json={"reviewer_id": "ann1", "decision": "edit", "edit_log": bad_edit},
            )
            assert resp.status_code == 400
            assert resp.json()["error_code"] == "invalid-edit"
            assert resp.json()["details"]["findings"]

            # the valid edit repairs the injected defect (relabel the ghost evidence)
            ghost = next(
                n for n in defective_graph.nodes_of_kind(NodeKind.EVIDENCE)
                if n.label == "ghost-asset-000"
            )
            fixed_doc = {
                "node_id": ghost.node_id,
                "kind": "Evidence",
                "label": case.evidence_assets[0].asset_id,
                "attributes": {k: (v if not hasattr(v, "isoformat") else v.isoformat())
                               for k, v in ghost.attributes.items()},
                "coupling": "Strong",
            }
            good_edit = [
                {"op": "remove_node", "node_id": ghost.node_id},
                {"op": "add_node", "node": fixed_doc},
            ]
            resp = requests.post(
                f"{base}/tasks/{task.task_id}/decision",
                headers=ann,
                json={"reviewer_id": "ann1", "decision": "edit", "edit_log": good_edit,
                      "note": "relabeled to the real asset"},
            )
            assert resp.status_code == 200, resp.text
            derived_id = resp.json()["task"]["derived_graph_id"]
            assert derived_id

            seniors = requests.get(
                f"{base}/tasks?stage=senior&status=pending", headers=sen
            ).json()["tasks"]
            assert [t["graph_id"] for t in seniors] == [derived_id]
            senior_task = seniors[0]["task_id"]
            requests.post(
                f"{base}/tasks/{senior_task}/claim", headers=sen, json={"reviewer_id": "sen1"}
            )
            resp = requests.post(
                f"{base}/tasks/{senior_task}/decision",
                headers=sen,
                json={"reviewer_id": "sen1", "decision": "approve"},
            )
            assert resp.status_code == 200

            finalized = requests.get(f"{base}/finalized", headers=sen).json()["graph_ids"]
            assert finalized == [derived_id]

            trail = requests.get(
                f"{base}/graphs/{defective_graph.graph_id}/audit", headers=sen
            ).json()["trail"]
            lineage = {defective_graph.graph_id, derived_id}
            expected_entries = [
                e for e in store.entries() if lineage & set(e.refs)
            ]
            assert len(trail) == len(expected_entries)
            assert [e["seq"] for e in trail] == [e.seq for e in expected_entries]
        finally:
            server.should_exit = True
            thread.join(timeout=5)


# ---------------------------------------------------------------------------
# 9. ablation toggles produce degraded corpora


def test_ablation_toggles_produce_degraded_corpora(tmp_path):
    from skg.canonical import read_lines
    from skg.corpus.bench import build_mm_bench, build_text_bench
    from skg.corpus.training import emit_training_corpora
    from skg.evaluation.splits import SplitAssignment
    from skg.pipeline import (
        ABLATION_FLAGS,
        PipelineConfig,
        mock_client_factory,
        run_pipeline,
        write_emissions,
    )
    from skg.rules import default_rules
    from skg.synth.templates import default_templates
    from skg.synthetic import synthetic_cases

    rules = default_rules()
    templates = default_templates()
    splitter = SplitAssignment(seed=0)

    with criterion("ablation toggles: five degraded pipelines run to completion", 60.0):
        cases = synthetic_cases(5, seed=888)
        for flag in ABLATION_FLAGS:
            config = PipelineConfig.with_ablations(
                [flag], workers=2, seed=888, variants_per_case=3
            )
            result = run_pipeline(
                cases, rules, templates, mock_client_factory(config), config
            )
            assert len(result.outcomes) == len(cases), flag
            assert result.emissions, flag

            out = tmp_path / flag
            out.mkdir()
            write_emissions(result.emissions, out / "emissions.skgl")
            with (out / "emissions.skgl").open(encoding="utf-8") as fp:
                assert sum(1 for _ in read_lines(fp)) == len(result.emissions)

            text_records = list(build_text_bench(result.emissions, splitter))
            mm_records = list(build_mm_bench(result.emissions, splitter))
            pt = list(emit_training_corpora(result.emissions, "pt"))
            assert len(pt) == len(result.emissions), flag
            assert text_records, flag
            assert mm_records, flag

            if flag == "skip_graph":
                assert all(e.graph is None for e in result.emissions)
            if flag == "skip_policy_nodes":
                assert all(
                    not any(q.subtask == "policy" for q in e.qa) for e in result.emissions
                )
            if flag == "skip_generalization":
                assert len(result.emissions) == len(cases)
            if flag == "skip_partition":
                assert all(e.description.coverage == {} for e in result.emissions)
