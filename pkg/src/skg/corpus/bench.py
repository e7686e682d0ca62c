"""Benchmark record assembly.

An Emission is one unit of synthesized output (a final bundle or a
generalized variant): the source case plus graph, description, and QA.
Bench builders fan each emission's QA items out into one record apiece,
with the split keyed on the base case id so variants can never straddle
a split boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator

from ..canonical import qa_from_doc, qa_to_doc
from ..errors import SchemaError
from ..model import SCHEMA_VERSION, ComplaintCase, QAItem, SceneDescription, SceneKnowledgeGraph
from ..values import encode_value
from .qa import MM_SUBTASKS, TEXT_SUBTASKS

BENCHMARKS = ("ComplaintScene-Text", "ComplaintScene-MM", "CFPB-Product", "CFPB-Issue")

Splitter = Callable[[str], str]


@dataclass(frozen=True)
class Emission:
    case: ComplaintCase
    graph: SceneKnowledgeGraph | None
    description: SceneDescription
    qa: tuple[QAItem, ...]

    def __post_init__(self):
        object.__setattr__(self, "qa", tuple(self.qa))

    @property
    def base_case_id(self) -> str:
        return self.case.case_id

    @property
    def complaint_type(self) -> str:
        if self.graph is not None:
            return self.graph.dim("complaint_type") or ""
        head = self.description.text.split("\n", 1)[0]
        if head.startswith("Complaint type: "):
            return head[len("Complaint type: ") :].rstrip(".")
        return ""


@dataclass(frozen=True)
class BenchRecord:
    record_id: str
    benchmark: str
    split: str
    base_case_id: str
    inputs: dict = field(default_factory=dict)
    qa: QAItem | None = None
    label: str | None = None
    complaint_type: str = ""

    def __post_init__(self):
        if self.benchmark not in BENCHMARKS:
            raise SchemaError(f"unknown benchmark {self.benchmark!r}")
        if self.split not in ("train", "dev", "test"):
            raise SchemaError(f"unknown split {self.split!r}")


def record_to_doc(record: BenchRecord) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "record_id": record.record_id,
        "benchmark": record.benchmark,
        "split": record.split,
        "base_case_id": record.base_case_id,
        "inputs": record.inputs,
        "complaint_type": record.complaint_type,
    }
    if record.qa is not None:
        doc["qa"] = qa_to_doc(record.qa)
    if record.label is not None:
        doc["label"] = record.label
    return doc


def record_from_doc(doc) -> BenchRecord:
    if not isinstance(doc, dict):
        raise SchemaError("bench record must be an object")
    return BenchRecord(
        record_id=doc.get("record_id", ""),
        benchmark=doc.get("benchmark", ""),
        split=doc.get("split", ""),
        base_case_id=doc.get("base_case_id", ""),
        inputs=doc.get("inputs", {}),
        qa=qa_from_doc(doc["qa"]) if "qa" in doc else None,
        label=doc.get("label"),
        complaint_type=doc.get("complaint_type", ""),
    )


def _history_summary(case: ComplaintCase, limit: int = 5) -> str:
    # last `limit` interactions, oldest first
    tail = case.history[-limit:]
    return "\n".join(
        f"{encode_value(rec.timestamp)} {rec.actor.value}: {rec.text}" for rec in tail
    )


def build_text_bench(emissions: Iterable[Emission], splitter: Splitter) -> Iterator[BenchRecord]:
    """Text-only records: one per text-subtask QA item, description as input."""
    for emission in emissions:
        split = splitter(emission.base_case_id)
        for item in emission.qa:
            if item.subtask not in TEXT_SUBTASKS:
                continue
            yield BenchRecord(
                record_id=item.qa_id,
                benchmark="ComplaintScene-Text",
                split=split,
                base_case_id=emission.base_case_id,
                inputs={"description": emission.description.text},
                qa=item,
                complaint_type=emission.complaint_type,
            )


def build_mm_bench(emissions: Iterable[Emission], splitter: Splitter) -> Iterator[BenchRecord]:
    """Multimodal records: narrative, asset refs, metadata, history summary.

    Emissions whose case has no evidence assets produce no multimodal
    records (every MM record must reference at least one asset).
    """
    for emission in emissions:
        case = emission.case
        if not case.evidence_assets:
            continue
        split = splitter(emission.base_case_id)
        inputs = {
            "narrative": case.narrative,
            "asset_refs": [a.integrity_hash for a in case.evidence_assets],
            "asset_ids": [a.asset_id for a in case.evidence_assets],
            "metadata": {k: encode_value(v) for k, v in case.metadata.items()},
            "history_summary": _history_summary(case),
        }
        for item in emission.qa:
            if item.subtask not in MM_SUBTASKS:
                continue
            yield BenchRecord(
                record_id=item.qa_id,
                benchmark="ComplaintScene-MM",
                split=split,
                base_case_id=emission.base_case_id,
                inputs=inputs,
                qa=item,
                complaint_type=emission.complaint_type,
            )


def build_cfpb_bench(
    labeled_cases: Iterable[tuple[ComplaintCase, str, str]],
    splitter: Splitter,
    which: str,
) -> Iterator[BenchRecord]:
    """Classification records from ingested complaint exports.

    ``which`` selects the gold field: "product" or "issue". Labels pass
    through byte-exact.
    """
    if which not in ("product", "issue"):
        raise ValueError("which must be 'product' or 'issue'")
    benchmark = "CFPB-Product" if which == "product" else "CFPB-Issue"
    for case, product, issue in labeled_cases:
        yield BenchRecord(
            record_id=f"{case.case_id}:{which}",
            benchmark=benchmark,
            split=splitter(case.case_id),
            base_case_id=case.case_id,
            inputs={"narrative": case.narrative},
            label=product if which == "product" else issue,
        )
