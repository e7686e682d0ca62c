"""Benchmark and training-corpus emission from synthesized scene bundles."""

from .bench import (
    BENCHMARKS,
    MM_SUBTASKS,
    TEXT_SUBTASKS,
    BenchRecord,
    Emission,
    build_cfpb_bench,
    build_mm_bench,
    build_text_bench,
    record_from_doc,
    record_to_doc,
)
from .corrupt import CorruptionSpec, corrupt_evidence
from .describe import render_scene_description
from .ingest import CfpbLabels, MalformedCsv, MissingColumns, ingest_cfpb_csv
from .qa import MissingAttribute, build_qa, sample_qa_items
from .training import emit_training_corpora

__all__ = [
    "BENCHMARKS",
    "BenchRecord",
    "CfpbLabels",
    "CorruptionSpec",
    "Emission",
    "MM_SUBTASKS",
    "MalformedCsv",
    "MissingAttribute",
    "MissingColumns",
    "TEXT_SUBTASKS",
    "build_cfpb_bench",
    "build_mm_bench",
    "build_qa",
    "build_text_bench",
    "corrupt_evidence",
    "emit_training_corpora",
    "ingest_cfpb_csv",
    "record_from_doc",
    "record_to_doc",
    "render_scene_description",
    "sample_qa_items",
]
