"""Benchmark execution against a model client or a replay file.

Each record becomes one prompt and one reply. Replies are parsed
leniently (option letter first, then a label-substring fallback);
anything unparseable, including transport failures, is an abstention
that scores as incorrect and is counted separately. Replay mode reads
replies from a file and is fully offline and bit-deterministic.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from ..canonical import canonical_text, loads_document, read_lines
from ..corpus.bench import BenchRecord
from ..corpus.corrupt import CorruptionSpec, corrupt_evidence
from ..errors import EmptyInput, SkgError
from ..model import SCHEMA_VERSION, ComplaintCase, DecisionAction
from ..rules.ast import ConstraintSet
from ..values import encode_value
from .consistency import Prediction, policy_consistency
from .metrics import accuracy, avg_mm, avg_text, macro_f1, round_score

SLICES = ("full", "corrupt_10", "corrupt_30", "rare")

_CORRUPTION_LEVELS = {"corrupt_10": 0.10, "corrupt_30": 0.30}

_LETTER_RE = re.compile(r"^\W{0,2}([A-E])(?:[\s).:,\]]|$)", re.IGNORECASE)

RARE_THRESHOLD = 0.005


class ReplayMismatch(SkgError):
    """The replay file lacks replies for requested records."""


class ReplayClient:
    """Replies keyed by record_id, loaded from a jsonl file or mapping."""

    def __init__(self, source):
        if isinstance(source, Mapping):
            self.replies = dict(source)
        else:
            self.replies = {}
            with Path(source).open(encoding="utf-8") as fp:
                for doc in read_lines(fp):
                    self.replies[doc["record_id"]] = doc["answer"]

    def reply_for(self, record_id: str) -> str:
        if record_id not in self.replies:
            raise ReplayMismatch(f"replay file has no reply for record {record_id}")
        return self.replies[record_id]


def render_eval_prompt(record: BenchRecord) -> str:
    """The prompt a record poses to the model under evaluation."""
    parts = []
    inputs = record.inputs
    if "description" in inputs:
        parts.append(inputs["description"])
    if "narrative" in inputs:
        parts.append(f"Complaint narrative:\n{inputs['narrative']}")
    if inputs.get("asset_refs"):
        parts.append("Evidence assets: " + ", ".join(inputs["asset_refs"]))
    if inputs.get("metadata"):
        lines = [f"{k}: {canonical_text(v)}" for k, v in sorted(inputs["metadata"].items())]
        parts.append("Metadata:\n" + "\n".join(lines))
    if inputs.get("history_summary"):
        parts.append("Recent interactions:\n" + inputs["history_summary"])
    if record.qa is not None:
        letters = "ABCDE"
        options = "\n".join(f"{letters[i]}. {o}" for i, o in enumerate(record.qa.options))
        parts.append(f"{record.qa.question}\n{options}\nAnswer with the option letter first.")
    else:
        parts.append("Reply with the exact class label and nothing else.")
    return "\n\n".join(parts)


def extract_answer(reply: str, options: Sequence[str]) -> int | None:
    """Option letter first; otherwise the earliest option label in the reply."""
    text = reply.strip()
    match = _LETTER_RE.match(text)
    if match:
        index = ord(match.group(1).upper()) - ord("A")
        if index < len(options):
            return index
    lowered = text.casefold()
    best: tuple[int, int, int] | None = None
    for i, option in enumerate(options):
        pos = lowered.find(option.casefold())
        if pos < 0:
            continue
        candidate = (pos, -len(option), i)
        if best is None or candidate < best:
            best = candidate
    return best[2] if best else None


def rare_type_filter(
    records: Iterable[BenchRecord],
    train_records: Iterable[BenchRecord],
    threshold: float = RARE_THRESHOLD,
) -> list[BenchRecord]:
    """Records whose complaint type is rare (or absent) in the train split."""
    counts: dict[str, int] = {}
    total = 0
    for record in train_records:
        total += 1
        counts[record.complaint_type] = counts.get(record.complaint_type, 0) + 1
    out = []
    for record in records:
        seen = counts.get(record.complaint_type, 0)
        frequency = seen / total if total else 0.0
        if seen == 0 or frequency < threshold:
            out.append(record)
    return out


@dataclass(frozen=True)
class EvalReport:
    slice_name: str
    per_subtask: dict = field(default_factory=dict)  # subtask -> Decimal 0-100
    aggregates: dict = field(default_factory=dict)
    counts: dict = field(default_factory=dict)
    config_digest: str = ""

    def to_doc(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "slice": self.slice_name,
            "per_subtask": {k: encode_value(v) for k, v in sorted(self.per_subtask.items())},
            "aggregates": {k: encode_value(v) for k, v in sorted(self.aggregates.items())},
            "counts": dict(sorted(self.counts.items())),
            "config_digest": self.config_digest,
        }


def _corrupted_view(record: BenchRecord, case: ComplaintCase, level: float, seed: int) -> BenchRecord:
    corrupted = corrupt_evidence(case, CorruptionSpec(level=level, seed=seed))
    if record.benchmark != "ComplaintScene-MM":
        return record
    from dataclasses import replace as dc_replace

    from .. import corpus

    inputs = dict(record.inputs)
    inputs["asset_refs"] = [a.integrity_hash for a in corrupted.evidence_assets]
    inputs["asset_ids"] = [a.asset_id for a in corrupted.evidence_assets]
    inputs["metadata"] = {k: encode_value(v) for k, v in corrupted.metadata.items()}
    inputs["history_summary"] = corpus.bench._history_summary(corrupted)
    return dc_replace(record, inputs=inputs)


def _predict_one(record: BenchRecord, reply: str) -> Prediction:
    if record.qa is None:
        label = reply.strip()
        return Prediction(record_id=record.record_id, label=label, abstained=not label)
    index = extract_answer(reply, record.qa.options)
    if index is None:
        return Prediction(record_id=record.record_id, abstained=True)
    option = record.qa.options[index]
    action = None
    if record.qa.subtask in ("action", "resolution") and option in {
        a.value for a in DecisionAction
    }:
        action = option
    return Prediction(
        record_id=record.record_id,
        predicted_index=index,
        label=option,
        predicted_action=action,
    )


def _collect_predictions(records, model, replay) -> list[Prediction]:
    from ..synth.client import AuthError, TransportError

    predictions = []
    for record in records:
        if replay is not None:
            reply = replay.reply_for(record.record_id)
        else:
            try:
                result = model.complete(
                    [{"role": "user", "content": render_eval_prompt(record)}], temperature=0.0
                )
                reply = result.text
            except (TransportError, AuthError):
                predictions.append(Prediction(record_id=record.record_id, abstained=True))
                continue
        predictions.append(_predict_one(record, reply))
    return predictions


# Macro-F1 subtasks score over the labels observed in that slice's golds;
# labels the slice never asks about cannot drag the mean to zero.
_MACRO_F1_SUBTASKS = ("action", "responsibility", "resolution")


def _score_subtasks(records, predictions) -> dict[str, Fraction]:
    by_subtask: dict[str, tuple[list, list]] = {}
    for record, pred in zip(records, predictions):
        if record.qa is None:
            continue
        preds, golds = by_subtask.setdefault(record.qa.subtask, ([], []))
        gold = record.qa.gold_option
        guess = pred.label if pred.label is not None and not pred.abstained else None
        preds.append(guess)
        golds.append(gold)
    scores: dict[str, Fraction] = {}
    for subtask, (preds, golds) in sorted(by_subtask.items()):
        if subtask in _MACRO_F1_SUBTASKS:
            scores[subtask] = macro_f1(preds, golds, tuple(dict.fromkeys(golds))) * 100
        else:
            scores[subtask] = accuracy(preds, golds) * 100
    return scores


def _score_labels(records, predictions) -> dict[str, Fraction]:
    by_bench: dict[str, tuple[list, list]] = {}
    for record, pred in zip(records, predictions):
        if record.label is None:
            continue
        preds, golds = by_bench.setdefault(record.benchmark, ([], []))
        preds.append(pred.label if not pred.abstained else None)
        golds.append(record.label)
    scores: dict[str, Fraction] = {}
    for bench, (preds, golds) in sorted(by_bench.items()):
        if bench == "CFPB-Issue":
            scores["cfpb_issue_macro_f1"] = macro_f1(preds, golds, tuple(dict.fromkeys(golds))) * 100
        else:
            scores["cfpb_product_accuracy"] = accuracy(preds, golds) * 100
    return scores


def run_eval(
    records: Sequence[BenchRecord],
    rules: ConstraintSet,
    *,
    model=None,
    replay: ReplayClient | None = None,
    slices: Sequence[str] = ("full",),
    cases: Mapping[str, ComplaintCase] | None = None,
    graphs: Mapping[str, object] | None = None,
    eval_split: str = "test",
    corruption_seed: int = 0,
    rare_threshold: float = RARE_THRESHOLD,
    config: dict | None = None,
) -> dict[str, EvalReport]:
    """Evaluate every requested slice; one report per slice.

    ``records`` is the full bench stream: the eval_split rows are
    queried, the train rows only inform the rare-type filter. Corrupt
    slices need ``cases`` (keyed by base_case_id); policy consistency
    needs ``graphs`` (keyed by graph_id).
    """
    if model is None and replay is None:
        raise ValueError("run_eval needs a model client or a replay source")
    records = list(records)
    eval_records = [r for r in records if r.split == eval_split]
    if not eval_records:
        raise EmptyInput(f"no records in split {eval_split!r}")
    train_records = [r for r in records if r.split == "train"]

    digest_doc = {
        "slices": sorted(slices),
        "split": eval_split,
        "corruption_seed": corruption_seed,
        "rare_threshold": rare_threshold,
        "replay": replay is not None,
        "config": config or {},
    }
    config_digest = hashlib.sha256(canonical_text(digest_doc).encode()).hexdigest()[:16]

    reports: dict[str, EvalReport] = {}
    for slice_name in slices:
        if slice_name not in SLICES:
            raise ValueError(f"unknown slice {slice_name!r}")
        if slice_name == "rare":
            slice_records = rare_type_filter(eval_records, train_records, rare_threshold)
            if not slice_records:
                reports[slice_name] = EvalReport(
                    slice_name=slice_name,
                    counts={"records": 0, "abstentions": 0},
                    config_digest=config_digest,
                )
                continue
        elif slice_name in _CORRUPTION_LEVELS:
            if cases is None:
                raise ValueError(f"slice {slice_name} needs the case store")
            level = _CORRUPTION_LEVELS[slice_name]
            slice_records = [
                _corrupted_view(r, cases[r.base_case_id], level, corruption_seed)
                for r in eval_records
            ]
        else:
            slice_records = eval_records

        predictions = _collect_predictions(slice_records, model, replay)
        per_subtask = _score_subtasks(slice_records, predictions)
        per_subtask.update(_score_labels(slice_records, predictions))

        aggregates: dict[str, Fraction] = {}
        if all(k in per_subtask for k in ("evidence", "policy", "action")):
            aggregates["avg_text"] = avg_text(
                per_subtask["evidence"], per_subtask["policy"], per_subtask["action"]
            )
        if all(k in per_subtask for k in ("routing", "responsibility", "resolution")):
            aggregates["avg_mm"] = avg_mm(
                per_subtask["routing"], per_subtask["responsibility"], per_subtask["resolution"]
            )
        if graphs is not None:
            pc_pairs = [
                (record, pred)
                for record, pred in zip(slice_records, predictions)
                if record.qa is not None
                and record.qa.subtask in ("action", "resolution")
                and record.qa.graph_id in graphs
            ]
            if pc_pairs:
                pc_graphs = {r.record_id: graphs[r.qa.graph_id] for r, _ in pc_pairs}
                pc_preds = [
                    pred if (pred.predicted_action or pred.abstained) else
                    Prediction(record_id=pred.record_id, abstained=True)
                    for _, pred in pc_pairs
                ]
                aggregates["policy_consistency"] = policy_consistency(
                    pc_preds, pc_graphs, rules
                )
        if slice_name == "rare":
            qa_pairs = [
                (r, p) for r, p in zip(slice_records, predictions) if r.qa is not None
            ]
            if qa_pairs:
                aggregates["rare_type_acc"] = (
                    accuracy(
                        [p.label if not p.abstained else None for _, p in qa_pairs],
                        [r.qa.gold_option for r, _ in qa_pairs],
                    )
                    * 100
                )

        counts = {
            "records": len(slice_records),
            "abstentions": sum(1 for p in predictions if p.abstained),
        }
        reports[slice_name] = EvalReport(
            slice_name=slice_name,
            per_subtask={k: round_score(v) for k, v in per_subtask.items()},
            aggregates={
                k: round_score(v, 4) if k == "policy_consistency" else round_score(v)
                for k, v in aggregates.items()
            },
            counts=counts,
            config_digest=config_digest,
        )
    return reports
