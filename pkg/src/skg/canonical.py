"""Canonical serialization for graphs and cases.

The wire form is a UTF-8 JSON document with a schema_version field.
Canonical bytes are fully deterministic: object keys sorted
lexicographically, nodes sorted by node_id, edges by edge_id, decimals
rendered without trailing zeros, timestamps as RFC 3339 UTC seconds,
no insignificant whitespace. Graph equality throughout the toolkit
means equality of canonical bytes.

Single graphs live in `.skg` files, cases in `.case` files; corpora use
one-record-per-line streams (`.skgl`, `.jsonl`).
"""

from __future__ import annotations

import hashlib
import json
from decimal import Decimal
from typing import IO, Iterator

from . import diff as diffmod
from .errors import GraphSyntaxError, SchemaError, VersionError
from .model import (
    SCHEMA_VERSION,
    Actor,
    ComplaintCase,
    CouplingClass,
    EvidenceAsset,
    EvidenceMedium,
    InteractionRecord,
    NodeKind,
    PolicyClause,
    Provenance,
    QAItem,
    RelationType,
    SceneDescription,
    SceneKnowledgeGraph,
    SkgEdge,
    SkgNode,
)
from .validate import require_valid
from .values import decode_value, encode_value, render_decimal

SUPPORTED_VERSIONS = {SCHEMA_VERSION}


# ---------------------------------------------------------------------------
# canonical JSON text


def canonical_text(value: object) -> str:
    """Deterministic JSON rendering of a JSON-level value tree."""
    if value is None or value is True or value is False:
        return json.dumps(value)
    if isinstance(value, Decimal):
        return render_decimal(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return render_decimal(Decimal(repr(value)))
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(canonical_text(v) for v in value) + "]"
    if isinstance(value, dict):
        parts = []
        for key in sorted(value):
            if not isinstance(key, str):
                raise SchemaError(f"object keys must be strings, got {key!r}")
            parts.append(json.dumps(key, ensure_ascii=False) + ":" + canonical_text(value[key]))
        return "{" + ",".join(parts) + "}"
    raise SchemaError(f"value {value!r} is not canonically serializable")


def canonical_bytes(value: object) -> bytes:
    return canonical_text(value).encode("utf-8")


def loads_document(raw: bytes | str) -> object:
    """Parse JSON preserving decimals; syntax errors carry the byte offset."""
    text = raw.decode("utf-8") if isinstance(raw, bytes) else raw
    try:
        return json.loads(text, parse_float=Decimal)
    except json.JSONDecodeError as exc:
        raise GraphSyntaxError(f"malformed document: {exc.msg}", offset=exc.pos) from exc


def digest(payload: bytes) -> str:
    return hashlib.sha256(payload).hexdigest()


# ---------------------------------------------------------------------------
# document builders (typed model -> JSON-level values)


def _attrs_doc(attributes) -> dict:
    return {key: encode_value(val) for key, val in attributes.items()}


def node_to_doc(node: SkgNode) -> dict:
    return {
        "node_id": node.node_id,
        "kind": node.kind.value,
        "label": node.label,
        "attributes": _attrs_doc(node.attributes),
        "coupling": node.coupling.value,
    }


def edge_to_doc(edge: SkgEdge) -> dict:
    return {
        "edge_id": edge.edge_id,
        "src": edge.src,
        "dst": edge.dst,
        "relation": edge.relation.value,
        "attributes": _attrs_doc(edge.attributes),
    }


def edit_to_doc(op) -> dict:
    if isinstance(op, diffmod.AddNode):
        return {"op": "add_node", "node": node_to_doc(op.node)}
    if isinstance(op, diffmod.RemoveNode):
        return {"op": "remove_node", "node_id": op.node_id}
    if isinstance(op, diffmod.AddEdge):
        return {"op": "add_edge", "edge": edge_to_doc(op.edge)}
    if isinstance(op, diffmod.RemoveEdge):
        return {"op": "remove_edge", "edge_id": op.edge_id}
    if isinstance(op, diffmod.SetAttribute):
        return {
            "op": "set_attribute",
            "target": op.target,
            "target_id": op.target_id,
            "key": op.key,
            "value": None if op.value is None else encode_value(op.value),
        }
    if isinstance(op, diffmod.SetDim):
        return {"op": "set_dim", "dim": op.dim, "value": op.value}
    raise SchemaError(f"unknown edit op {type(op).__name__}")


def provenance_to_doc(prov: Provenance) -> dict:
    if prov.kind == "canonical":
        return {"type": "canonical"}
    return {
        "type": "generalized",
        "parent_graph_id": prov.parent_graph_id,
        "edit_log": [edit_to_doc(op) for op in prov.edit_log],
    }


def graph_to_doc(graph: SceneKnowledgeGraph) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "graph_id": graph.graph_id,
        "base_case_id": graph.base_case_id,
        "provenance": provenance_to_doc(graph.provenance),
        "scene_dims": dict(graph.scene_dims),
        "nodes": [node_to_doc(n) for n in sorted(graph.nodes, key=lambda n: n.node_id)],
        "edges": [edge_to_doc(e) for e in sorted(graph.edges, key=lambda e: e.edge_id)],
    }


def content_doc(graph: SceneKnowledgeGraph) -> dict:
    """The editable portion of a graph (identity and provenance excluded)."""
    return {
        "scene_dims": dict(graph.scene_dims),
        "nodes": [node_to_doc(n) for n in sorted(graph.nodes, key=lambda n: n.node_id)],
        "edges": [edge_to_doc(e) for e in sorted(graph.edges, key=lambda e: e.edge_id)],
    }


def canonicalize(graph: SceneKnowledgeGraph) -> bytes:
    """Canonical bytes of a valid graph; raises InvalidGraph otherwise."""
    require_valid(graph)
    return canonical_bytes(graph_to_doc(graph))


def canonical_content(graph: SceneKnowledgeGraph) -> bytes:
    return canonical_bytes(content_doc(graph))


def content_equal(a: SceneKnowledgeGraph, b: SceneKnowledgeGraph) -> bool:
    return canonical_content(a) == canonical_content(b)


def graph_digest(graph: SceneKnowledgeGraph) -> str:
    return digest(canonicalize(graph))


# ---------------------------------------------------------------------------
# document readers (JSON-level values -> typed model)


def _expect_object(doc, path) -> dict:
    if not isinstance(doc, dict):
        raise SchemaError(f"expected an object at {path or '<root>'}", path=path)
    return doc


def _expect_str(doc, key, path, required=True, default="") -> str:
    value = doc.get(key)
    if value is None and not required:
        return default
    if not isinstance(value, str):
        raise SchemaError(f"field {key} must be a string", path=f"{path}.{key}" if path else key)
    return value


def _expect_list(doc, key, path) -> list:
    value = doc.get(key, [])
    if not isinstance(value, list):
        raise SchemaError(f"field {key} must be a list", path=f"{path}.{key}" if path else key)
    return value


def _enum(cls, raw, path):
    try:
        return cls(raw)
    except ValueError:
        allowed = ", ".join(m.value for m in cls)
        raise SchemaError(f"{raw!r} is not one of ({allowed})", path=path) from None


def _attrs_from_doc(doc, path) -> dict:
    raw = doc.get("attributes", {})
    if not isinstance(raw, dict):
        raise SchemaError("attributes must be an object", path=path)
    return {key: decode_value(val, path=f"{path}.{key}") for key, val in raw.items()}


def node_from_doc(doc, path="node") -> SkgNode:
    doc = _expect_object(doc, path)
    return SkgNode(
        node_id=_expect_str(doc, "node_id", path),
        kind=_enum(NodeKind, doc.get("kind"), f"{path}.kind"),
        label=_expect_str(doc, "label", path),
        attributes=_attrs_from_doc(doc, f"{path}.attributes"),
        coupling=_enum(CouplingClass, doc.get("coupling", "Weak"), f"{path}.coupling"),
    )


def edge_from_doc(doc, path="edge") -> SkgEdge:
    doc = _expect_object(doc, path)
    return SkgEdge(
        edge_id=_expect_str(doc, "edge_id", path),
        src=_expect_str(doc, "src", path),
        dst=_expect_str(doc, "dst", path),
        relation=_enum(RelationType, doc.get("relation"), f"{path}.relation"),
        attributes=_attrs_from_doc(doc, f"{path}.attributes"),
    )


def edit_from_doc(doc, path="edit"):
    doc = _expect_object(doc, path)
    op = doc.get("op")
    if op == "add_node":
        return diffmod.AddNode(node_from_doc(doc.get("node"), f"{path}.node"))
    if op == "remove_node":
        return diffmod.RemoveNode(_expect_str(doc, "node_id", path))
    if op == "add_edge":
        return diffmod.AddEdge(edge_from_doc(doc.get("edge"), f"{path}.edge"))
    if op == "remove_edge":
        return diffmod.RemoveEdge(_expect_str(doc, "edge_id", path))
    if op == "set_attribute":
        target = _expect_str(doc, "target", path)
        if target not in ("node", "edge"):
            raise SchemaError(f"set_attribute target must be node or edge, got {target!r}", path=path)
        raw = doc.get("value")
        return diffmod.SetAttribute(
            target=target,
            target_id=_expect_str(doc, "target_id", path),
            key=_expect_str(doc, "key", path),
            value=None if raw is None else decode_value(raw, path=f"{path}.value"),
        )
    if op == "set_dim":
        return diffmod.SetDim(_expect_str(doc, "dim", path), _expect_str(doc, "value", path))
    raise SchemaError(f"unknown edit op {op!r}", path=path)


def provenance_from_doc(doc, path="provenance") -> Provenance:
    doc = _expect_object(doc, path)
    kind = doc.get("type")
    if kind == "canonical":
        return Provenance.canonical()
    if kind == "generalized":
        log = [
            edit_from_doc(entry, f"{path}.edit_log[{i}]")
            for i, entry in enumerate(_expect_list(doc, "edit_log", path))
        ]
        return Provenance.generalized(_expect_str(doc, "parent_graph_id", path), log)
    raise SchemaError(f"unknown provenance type {kind!r}", path=path)


def _check_version(doc, path=""):
    version = doc.get("schema_version")
    if not isinstance(version, str):
        raise SchemaError("schema_version must be a string", path=f"{path}.schema_version")
    if version not in SUPPORTED_VERSIONS:
        raise VersionError(f"unsupported schema_version {version!r} (supported: {sorted(SUPPORTED_VERSIONS)})")


def graph_from_doc(doc, path="") -> SceneKnowledgeGraph:
    doc = _expect_object(doc, path)
    _check_version(doc, path)
    dims_raw = doc.get("scene_dims", {})
    if not isinstance(dims_raw, dict) or not all(isinstance(v, str) for v in dims_raw.values()):
        raise SchemaError("scene_dims must map strings to strings", path=f"{path}.scene_dims")
    return SceneKnowledgeGraph(
        graph_id=_expect_str(doc, "graph_id", path),
        base_case_id=_expect_str(doc, "base_case_id", path),
        provenance=provenance_from_doc(doc.get("provenance", {"type": "canonical"})),
        scene_dims=dict(dims_raw),
        nodes=[node_from_doc(n, f"nodes[{i}]") for i, n in enumerate(_expect_list(doc, "nodes", path))],
        edges=[edge_from_doc(e, f"edges[{i}]") for i, e in enumerate(_expect_list(doc, "edges", path))],
    )


def parse_graph(raw: bytes | str) -> SceneKnowledgeGraph:
    """Inverse of canonicalize; errors carry byte offset or field path."""
    return graph_from_doc(loads_document(raw))


# ---------------------------------------------------------------------------
# complaint cases


def asset_to_doc(asset: EvidenceAsset) -> dict:
    doc = {
        "asset_id": asset.asset_id,
        "medium": asset.medium.value,
        "uri": asset.uri,
        "integrity_hash": asset.integrity_hash,
    }
    if asset.extracted_text is not None:
        doc["extracted_text"] = asset.extracted_text
    if asset.captured_at is not None:
        doc["captured_at"] = encode_value(asset.captured_at)
    return doc


def case_to_doc(case: ComplaintCase) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "case_id": case.case_id,
        "narrative": case.narrative,
        "evidence_assets": [asset_to_doc(a) for a in case.evidence_assets],
        "metadata": _attrs_doc(case.metadata),
        "history": [
            {"timestamp": encode_value(r.timestamp), "actor": r.actor.value, "text": r.text}
            for r in case.history
        ],
        "policy_clauses": [
            {"clause_id": c.clause_id, "title": c.title, "body": c.body}
            for c in case.policy_clauses
        ],
    }


def canonicalize_case(case: ComplaintCase) -> bytes:
    return canonical_bytes(case_to_doc(case))


def case_digest(case: ComplaintCase) -> str:
    return digest(canonicalize_case(case))


def asset_from_doc(doc, path="asset") -> EvidenceAsset:
    doc = _expect_object(doc, path)
    captured = doc.get("captured_at")
    return EvidenceAsset(
        asset_id=_expect_str(doc, "asset_id", path),
        medium=_enum(EvidenceMedium, doc.get("medium"), f"{path}.medium"),
        uri=_expect_str(doc, "uri", path, required=False),
        integrity_hash=_expect_str(doc, "integrity_hash", path, required=False),
        extracted_text=doc.get("extracted_text"),
        captured_at=None if captured is None else decode_value(captured, f"{path}.captured_at"),
    )


def case_from_doc(doc, path="") -> ComplaintCase:
    doc = _expect_object(doc, path)
    _check_version(doc, path)
    history = []
    for i, rec in enumerate(_expect_list(doc, "history", path)):
        rec = _expect_object(rec, f"history[{i}]")
        history.append(
            InteractionRecord(
                timestamp=decode_value(rec.get("timestamp"), f"history[{i}].timestamp"),
                actor=_enum(Actor, rec.get("actor"), f"history[{i}].actor"),
                text=_expect_str(rec, "text", f"history[{i}]", required=False),
            )
        )
    clauses = []
    for i, cl in enumerate(_expect_list(doc, "policy_clauses", path)):
        cl = _expect_object(cl, f"policy_clauses[{i}]")
        clauses.append(
            PolicyClause(
                clause_id=_expect_str(cl, "clause_id", f"policy_clauses[{i}]"),
                title=_expect_str(cl, "title", f"policy_clauses[{i}]", required=False),
                body=_expect_str(cl, "body", f"policy_clauses[{i}]"),
            )
        )
    metadata = {
        key: decode_value(val, f"metadata.{key}")
        for key, val in _expect_object(doc.get("metadata", {}), "metadata").items()
    }
    return ComplaintCase(
        case_id=_expect_str(doc, "case_id", path),
        narrative=_expect_str(doc, "narrative", path, required=False),
        evidence_assets=[
            asset_from_doc(a, f"evidence_assets[{i}]")
            for i, a in enumerate(_expect_list(doc, "evidence_assets", path))
        ],
        metadata=metadata,
        history=history,
        policy_clauses=clauses,
    )


def parse_case(raw: bytes | str) -> ComplaintCase:
    return case_from_doc(loads_document(raw))


# ---------------------------------------------------------------------------
# descriptions and QA items (bundle payload components)


def description_to_doc(desc: SceneDescription) -> dict:
    return {
        "graph_id": desc.graph_id,
        "text": desc.text,
        "coverage": {nid: [start, end] for nid, (start, end) in desc.coverage.items()},
    }


def description_from_doc(doc, path="description") -> SceneDescription:
    doc = _expect_object(doc, path)
    raw_cov = doc.get("coverage", {})
    if not isinstance(raw_cov, dict):
        raise SchemaError("coverage must be an object", path=f"{path}.coverage")
    coverage = {}
    for nid, span in raw_cov.items():
        if not isinstance(span, list) or len(span) != 2 or not all(isinstance(x, int) for x in span):
            raise SchemaError(f"coverage span for {nid} must be [start, end]", path=f"{path}.coverage")
        coverage[nid] = (span[0], span[1])
    return SceneDescription(
        graph_id=_expect_str(doc, "graph_id", path),
        text=_expect_str(doc, "text", path),
        coverage=coverage,
    )


def qa_to_doc(item: QAItem) -> dict:
    return {
        "qa_id": item.qa_id,
        "graph_id": item.graph_id,
        "subtask": item.subtask,
        "question": item.question,
        "options": list(item.options),
        "gold_index": item.gold_index,
    }


def qa_from_doc(doc, path="qa") -> QAItem:
    doc = _expect_object(doc, path)
    options = _expect_list(doc, "options", path)
    if not all(isinstance(o, str) for o in options):
        raise SchemaError("options must be strings", path=f"{path}.options")
    gold = doc.get("gold_index")
    if not isinstance(gold, int) or isinstance(gold, bool):
        raise SchemaError("gold_index must be an integer", path=f"{path}.gold_index")
    return QAItem(
        qa_id=_expect_str(doc, "qa_id", path),
        graph_id=_expect_str(doc, "graph_id", path),
        subtask=_expect_str(doc, "subtask", path),
        question=_expect_str(doc, "question", path),
        options=options,
        gold_index=gold,
    )


# ---------------------------------------------------------------------------
# line streams


def write_lines(fp: IO[str], docs) -> int:
    count = 0
    for doc in docs:
        fp.write(canonical_text(doc))
        fp.write("\n")
        count += 1
    return count


def read_lines(fp: IO[str]) -> Iterator[object]:
    for line in fp:
        line = line.strip()
        if line:
            yield loads_document(line)
