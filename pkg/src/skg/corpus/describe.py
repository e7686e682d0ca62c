"""Deterministic scene description rendering.

The template walks six fixed sections: complaint type, evidence status,
timeline, transactional state, policy cues, candidate actions. Every
strongly coupled node gets a character span in the coverage map (plus
some weak nodes of the same kinds, which is harmless). Rendering twice
gives byte-identical text.
"""

from __future__ import annotations

from datetime import datetime

from ..model import NodeKind, SceneDescription, SceneKnowledgeGraph
from ..values import render_timestamp


class _Builder:
    def __init__(self, track_coverage: bool):
        self.parts: list[str] = []
        self.length = 0
        self.coverage: dict[str, tuple[int, int]] = {}
        self.track = track_coverage

    def emit(self, text: str, node_id: str | None = None):
        start = self.length
        self.parts.append(text)
        self.length += len(text)
        if node_id is not None and self.track:
            self.coverage.setdefault(node_id, (start, self.length))

    def text(self) -> str:
        return "".join(self.parts)


def _sorted_events(graph):
    def key(node):
        ts = node.attr("timestamp")
        stamp = render_timestamp(ts) if isinstance(ts, datetime) else ""
        return (stamp, node.node_id)

    return sorted(graph.nodes_of_kind(NodeKind.EVENT), key=key)


def render_scene_description(
    graph: SceneKnowledgeGraph, *, track_coverage: bool = True
) -> SceneDescription:
    out = _Builder(track_coverage)

    out.emit("Complaint type: ")
    ct = graph.dim("complaint_type") or "unspecified"
    carriers = sorted(
        (
            n.node_id
            for n in graph.nodes
            if n.kind in (NodeKind.ENTITY, NodeKind.STATE) and "complaint_type" in n.attributes
        ),
    )
    start = out.length
    out.emit(ct)
    for node_id in carriers:
        if out.track:
            out.coverage.setdefault(node_id, (start, out.length))
    out.emit(".\n")

    out.emit("Evidence status: ")
    evidence = sorted(graph.nodes_of_kind(NodeKind.EVIDENCE), key=lambda n: n.node_id)
    if not evidence:
        out.emit("no evidence on file")
    for i, node in enumerate(evidence):
        if i:
            out.emit("; ")
        medium = node.attr("medium", "asset")
        validity = node.attr("validity", "unknown")
        out.emit(f"{node.label} ({medium}, {validity})", node.node_id)
    out.emit(".\n")

    out.emit("Timeline: ")
    events = _sorted_events(graph)
    if not events:
        out.emit("no recorded events")
    for i, node in enumerate(events):
        if i:
            out.emit("; ")
        ts = node.attr("timestamp")
        stamp = render_timestamp(ts) if isinstance(ts, datetime) else "undated"
        stage = node.attr("stage", "unstaged")
        out.emit(f"{stamp} {node.label} [{stage}]", node.node_id)
    out.emit(".\n")

    out.emit("Transactional state: ")
    states = sorted(graph.nodes_of_kind(NodeKind.STATE), key=lambda n: n.node_id)
    if not states:
        out.emit("not recorded")
    for i, node in enumerate(states):
        if i:
            out.emit("; ")
        fields = []
        for key, caption in (
            ("order_status", "status"),
            ("service_stage", "stage"),
            ("responsibility", "responsibility"),
            ("merchant_response", "merchant response"),
        ):
            value = node.attr(key)
            if value is not None:
                fields.append(f"{caption} {value}")
        detail = ", ".join(fields) if fields else "no tracked variables"
        out.emit(f"{node.label} — {detail}", node.node_id)
    out.emit(".\n")

    out.emit("Policy cues: ")
    policies = sorted(graph.nodes_of_kind(NodeKind.POLICY), key=lambda n: n.node_id)
    if not policies:
        out.emit("none cited")
    for i, node in enumerate(policies):
        if i:
            out.emit("; ")
        applies = "applies" if node.attr("applies") is True else "does not apply"
        out.emit(f"{node.label} ({applies})", node.node_id)
    out.emit(".\n")

    out.emit("Candidate actions: ")
    decisions = sorted(graph.nodes_of_kind(NodeKind.DECISION), key=lambda n: n.node_id)
    final = graph.final_decision()
    entries = []
    if final is not None:
        entries.append((final, f"recommended {final.attr('action')}"))
    for node in decisions:
        if final is not None and node.node_id == final.node_id:
            continue
        entries.append((node, f"considered {node.attr('action')}"))
    if not entries:
        out.emit("none recorded")
    for i, (node, phrase) in enumerate(entries):
        if i:
            out.emit("; ")
        out.emit(phrase, node.node_id)
    out.emit(".")

    return SceneDescription(
        graph_id=graph.graph_id, text=out.text(), coverage=out.coverage
    )
