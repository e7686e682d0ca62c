from __future__ import annotations

from decimal import Decimal

import pytest

from skg.corpus.bench import build_mm_bench, build_text_bench
from skg.evaluation.metrics import avg_mm, avg_text, round_score
from skg.evaluation.report import report_doc, write_csv, write_report
from skg.evaluation.runner import (
    ReplayClient,
    ReplayMismatch,
    extract_answer,
    rare_type_filter,
    render_eval_prompt,
    run_eval,
)
from skg.evaluation.splits import SplitAssignment
from tests.test_bench import _emissions

_LETTERS = "ABCDE"

SPLITTER = SplitAssignment(ratios={"train": 0.5, "dev": 0.2, "test": 0.3}, seed=2)


def _bench(count=30, seed=83):
    emissions = _emissions(count, seed=seed)
    records = list(build_text_bench(emissions, SPLITTER)) + list(
        build_mm_bench(emissions, SPLITTER)
    )
    cases = {e.base_case_id: e.case for e in emissions}
    graphs = {e.graph.graph_id: e.graph for e in emissions}
    return records, cases, graphs


def _gold_replay(records):
    return ReplayClient(
        {r.record_id: _LETTERS[r.qa.gold_index] for r in records if r.qa is not None}
    )


def test_all_gold_replay_scores_everything_at_100():
    records, cases, graphs = _bench()
    reports = run_eval(records, rules=_default_rules(), replay=_gold_replay(records), graphs=graphs)
    report = reports["full"]
    for subtask, score in report.per_subtask.items():
        assert score == Decimal("100.00"), subtask
    assert report.aggregates["avg_text"] == Decimal("100.00")
    assert report.aggregates["avg_mm"] == Decimal("100.00")
    assert report.aggregates["policy_consistency"] == Decimal("1.0000")
    assert report.counts["abstentions"] == 0


def _default_rules():
    from skg.rules import default_rules

    return default_rules()


def test_extract_answer_letter_first():
    options = ("Refund", "Reject", "Escalate")
    assert extract_answer("B", options) == 1
    assert extract_answer("b.", options) == 1
    assert extract_answer("(C) because policy", options) == 2
    assert extract_answer("A: Refund", options) == 0
    # letter out of range falls back, then gives up
    assert extract_answer("E", options) is None


def test_extract_answer_falls_back_to_label():
    options = ("Refund", "Reject", "Escalate")
    assert extract_answer("the right call is to escalate", options) == 2
    assert extract_answer("Reject the claim", options) == 1
    assert extract_answer("no idea", options) is None


def test_abstentions_flagged_and_scored_wrong():
    records, cases, graphs = _bench()
    replies = {r.record_id: _LETTERS[r.qa.gold_index] for r in records if r.qa}
    broken = [r.record_id for r in records if r.split == "test"][:3]
    for record_id in broken:
        replies[record_id] = "???"
    reports = run_eval(records, rules=_default_rules(), replay=ReplayClient(replies))
    assert reports["full"].counts["abstentions"] == 3


def test_replay_mismatch_raises():
    records, _, _ = _bench(10)
    with pytest.raises(ReplayMismatch):
        run_eval(records, rules=_default_rules(), replay=ReplayClient({}))


def test_corrupt_slice_has_record_parity_and_fewer_refs():
    records, cases, graphs = _bench()
    reports = run_eval(
        records,
        rules=_default_rules(),
        replay=_gold_replay(records),
        slices=("full", "corrupt_30"),
        cases=cases,
    )
    assert reports["corrupt_30"].counts["records"] == reports["full"].counts["records"]


def test_corrupt_slice_requires_cases():
    records, _, _ = _bench(10)
    with pytest.raises(ValueError):
        run_eval(records, rules=_default_rules(), replay=_gold_replay(records), slices=("corrupt_10",))


def test_rare_filter_matches_counting_oracle():
    records, _, _ = _bench(60, seed=29)
    train = [r for r in records if r.split == "train"]
    test = [r for r in records if r.split == "test"]
    threshold = 0.2
    got = rare_type_filter(test, train, threshold)
    counts = {}
    for r in train:
        counts[r.complaint_type] = counts.get(r.complaint_type, 0) + 1
    want = [
        r
        for r in test
        if counts.get(r.complaint_type, 0) == 0
        or counts.get(r.complaint_type, 0) / len(train) < threshold
    ]
    assert got == want


def test_rare_threshold_zero_keeps_only_unseen():
    records, _, _ = _bench(40, seed=31)
    train = [r for r in records if r.split == "train"]
    test = [r for r in records if r.split == "test"]
    got = rare_type_filter(test, train, 0.0)
    train_types = {r.complaint_type for r in train}
    assert all(r.complaint_type not in train_types for r in got)


def test_aggregates_recomputable_from_subtasks():
    records, cases, graphs = _bench()
    replies = {}
    for r in records:
        if r.qa is None:
            continue
        gold = _LETTERS[r.qa.gold_index]
        # miss every 4th record to get non-trivial scores
        wrong = _LETTERS[(r.qa.gold_index + 1) % len(r.qa.options)]
        replies[r.record_id] = wrong if hash(r.record_id) % 4 == 0 else gold
    reports = run_eval(records, rules=_default_rules(), replay=ReplayClient(replies))
    report = reports["full"]
    sub = report.per_subtask
    recomputed_text = round_score(avg_text(sub["evidence"], sub["policy"], sub["action"]))
    assert abs(recomputed_text - report.aggregates["avg_text"]) <= Decimal("0.005")
    recomputed_mm = round_score(avg_mm(sub["routing"], sub["responsibility"], sub["resolution"]))
    assert abs(recomputed_mm - report.aggregates["avg_mm"]) <= Decimal("0.005")


def test_replay_reports_bit_identical(tmp_path):
    records, cases, graphs = _bench()
    replay = _gold_replay(records)
    first = run_eval(records, rules=_default_rules(), replay=replay, graphs=graphs)
    second = run_eval(records, rules=_default_rules(), replay=replay, graphs=graphs)
    path_a, path_b = tmp_path / "a.json", tmp_path / "b.json"
    write_report(first, path_a)
    write_report(second, path_b)
    assert path_a.read_bytes() == path_b.read_bytes()


def test_csv_export_one_row_per_metric(tmp_path):
    records, cases, graphs = _bench(20)
    reports = run_eval(records, rules=_default_rules(), replay=_gold_replay(records))
    csv_path = tmp_path / "out.csv"
    write_csv(reports, csv_path)
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "slice,metric,score"
    assert len(lines) == 1 + len(reports["full"].per_subtask) + len(reports["full"].aggregates)


def test_prompt_renders_inputs_and_options():
    records, _, _ = _bench(10)
    record = next(r for r in records if r.benchmark == "ComplaintScene-MM")
    prompt = render_eval_prompt(record)
    assert record.inputs["narrative"] in prompt
    assert record.qa.question in prompt
    assert "Answer with the option letter first." in prompt


def test_model_client_path_works_offline():
    records, _, _ = _bench(10)

    class GoldModel:
        def complete(self, messages, *, temperature=None, max_tokens=None):
            from skg.synth.client import CompletionResult

            prompt = messages[0]["content"]
            for record in records:
                if record.qa and record.qa.question in prompt:
                    return CompletionResult(text=_LETTERS[record.qa.gold_index])
            return CompletionResult(text="?")

    reports = run_eval(records, rules=_default_rules(), model=GoldModel())
    assert reports["full"].counts["abstentions"] == 0
