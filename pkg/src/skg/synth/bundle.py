"""Structured-output contract for model responses.

A model response must contain exactly one fenced block labeled
``skg-bundle`` holding a JSON object {graph, description, qa}. Parsing
is all-or-nothing: any defect surfaces as a typed error carrying the
raw response text for the audit trail, never as a silently partial
bundle.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..canonical import (
    canonical_text,
    description_from_doc,
    description_to_doc,
    graph_from_doc,
    graph_to_doc,
    loads_document,
    qa_from_doc,
    qa_to_doc,
)
from ..errors import GraphSyntaxError, SchemaError, SkgError
from ..model import QAItem, SceneDescription, SceneKnowledgeGraph
from ..validate import validate_graph

_FENCE_RE = re.compile(r"```skg-bundle[ \t]*\n(.*?)```", re.DOTALL)


class BundleParseError(SkgError):
    """Base for payload extraction/validation failures; keeps the raw text."""

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


class NoPayloadBlock(BundleParseError):
    pass


class MultiplePayloadBlocks(BundleParseError):
    pass


class BundleSchemaError(BundleParseError):
    pass


class BundleStructuralError(BundleParseError):
    def __init__(self, message: str, raw: str = "", violations=()):
        super().__init__(message, raw)
        self.violations = tuple(violations)


@dataclass(frozen=True)
class GenerationBundle:
    """One loop iteration's (graph, description, QA) triple."""

    iteration: int
    graph: SceneKnowledgeGraph | None
    description: SceneDescription
    qa: tuple[QAItem, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "qa", tuple(self.qa))
        if self.iteration < 0:
            raise SchemaError("iteration must be >= 0")
        if self.graph is not None:
            if self.description.graph_id != self.graph.graph_id:
                raise SchemaError("description.graph_id must match the bundle graph")
            for item in self.qa:
                if item.graph_id != self.graph.graph_id:
                    raise SchemaError(f"qa item {item.qa_id} references a different graph")


def bundle_to_doc(bundle: GenerationBundle) -> dict:
    doc = {
        "description": description_to_doc(bundle.description),
        "qa": [qa_to_doc(item) for item in bundle.qa],
    }
    if bundle.graph is not None:
        doc["graph"] = graph_to_doc(bundle.graph)
    return doc


def bundle_payload_text(bundle: GenerationBundle) -> str:
    """The fenced payload form of a bundle (used in refine prompts and mocks)."""
    return f"```skg-bundle\n{canonical_text(bundle_to_doc(bundle))}\n```"


def parse_bundle(
    raw: str,
    expected_iteration: int,
    *,
    allow_missing_graph: bool = False,
) -> GenerationBundle:
    """Extract, schema-check, and structurally validate the payload block."""
    blocks = _FENCE_RE.findall(raw)
    if not blocks:
        raise NoPayloadBlock("response contains no skg-bundle block", raw)
    if len(blocks) > 1:
        raise MultiplePayloadBlocks(f"response contains {len(blocks)} skg-bundle blocks", raw)

    try:
        doc = loads_document(blocks[0])
    except GraphSyntaxError as exc:
        raise BundleSchemaError(f"payload is not valid JSON: {exc}", raw) from exc

    if not isinstance(doc, dict):
        raise BundleSchemaError("payload must be a JSON object", raw)
    unknown = set(doc) - {"graph", "description", "qa"}
    if unknown:
        raise BundleSchemaError(f"payload has unknown keys: {sorted(unknown)}", raw)
    if "description" not in doc or "qa" not in doc:
        raise BundleSchemaError("payload needs description and qa", raw)
    if "graph" not in doc and not allow_missing_graph:
        raise BundleSchemaError("payload needs a graph", raw)

    try:
        graph = graph_from_doc(doc["graph"]) if "graph" in doc else None
        description = description_from_doc(doc["description"])
        qa_docs = doc["qa"]
        if not isinstance(qa_docs, list):
            raise SchemaError("qa must be a list", path="qa")
        qa = [qa_from_doc(q, f"qa[{i}]") for i, q in enumerate(qa_docs)]
        bundle = GenerationBundle(
            iteration=expected_iteration, graph=graph, description=description, qa=qa
        )
    except SchemaError as exc:
        raise BundleSchemaError(f"payload schema error at {exc.path or '?'}: {exc}", raw) from exc

    if graph is not None:
        result = validate_graph(graph)
        if not result.ok:
            raise BundleStructuralError(
                f"bundle graph is invalid: {', '.join(sorted(result.codes()))}",
                raw,
                result.violations,
            )
    return bundle
