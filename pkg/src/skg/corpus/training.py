"""Training-corpus emission for the three adaptation stages.

pt: one plain-text document per emission (description plus QA), for
domain-adaptive language training. sft: instruction/context/response
triples, one per QA item. mm: multimodal rows carrying the raw case
fields next to the question. All streams are line-oriented JSON with a
schema_version on every record.
"""

from __future__ import annotations

from typing import Iterable, Iterator

from ..model import SCHEMA_VERSION, QAItem
from ..values import encode_value
from .bench import Emission, _history_summary

STAGES = ("pt", "sft", "mm")

_LETTERS = "ABCDE"


def format_options(item: QAItem) -> str:
    return "\n".join(f"{_LETTERS[i]}. {opt}" for i, opt in enumerate(item.options))


def _qa_block(item: QAItem) -> str:
    return f"Q: {item.question}\n{format_options(item)}\nA: {item.gold_option}"


def emit_training_corpora(emissions: Iterable[Emission], stage: str) -> Iterator[dict]:
    """Stage-specific record stream; see module docstring for layouts."""
    if stage not in STAGES:
        raise ValueError(f"stage must be one of {STAGES}")
    for emission in emissions:
        graph_id = emission.description.graph_id
        if stage == "pt":
            blocks = [emission.description.text]
            blocks.extend(_qa_block(item) for item in emission.qa)
            yield {
                "schema_version": SCHEMA_VERSION,
                "record_id": f"pt:{graph_id}",
                "base_case_id": emission.base_case_id,
                "text": "\n\n".join(blocks),
            }
        elif stage == "sft":
            for item in emission.qa:
                yield {
                    "schema_version": SCHEMA_VERSION,
                    "record_id": f"sft:{item.qa_id}",
                    "base_case_id": emission.base_case_id,
                    "instruction": f"{item.question}\n{format_options(item)}",
                    "context": emission.description.text,
                    "response": item.gold_option,
                }
        else:
            case = emission.case
            for item in emission.qa:
                yield {
                    "schema_version": SCHEMA_VERSION,
                    "record_id": f"mm:{item.qa_id}",
                    "base_case_id": emission.base_case_id,
                    "narrative": case.narrative,
                    "asset_refs": [a.integrity_hash for a in case.evidence_assets],
                    "metadata": {k: encode_value(v) for k, v in case.metadata.items()},
                    "history_summary": _history_summary(case),
                    "question": f"{item.question}\n{format_options(item)}",
                    "response": item.gold_option,
                }
