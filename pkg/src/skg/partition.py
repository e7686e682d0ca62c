"""Strong/weak node partition.

A node is strongly coupled when its value can change the admissibility
or direction of the final decision. The classification is a mechanical
function of node kind, attribute keys, and timeline membership:

  Strong: every Policy node; every Decision node; every Evidence node;
          State nodes carrying order_status, service_stage, or
          responsibility; Event nodes on the timeline (at least one
          precedes edge in or out); Entity or State nodes carrying
          complaint_type.
  Weak:   everything else.
"""

from __future__ import annotations

from dataclasses import replace

from .errors import CouplingMismatch
from .model import (
    CouplingClass,
    NodeKind,
    RelationType,
    SceneKnowledgeGraph,
    SkgNode,
)

_STRONG_STATE_KEYS = frozenset({"order_status", "service_stage", "responsibility"})


def _timeline_node_ids(graph: SceneKnowledgeGraph) -> frozenset[str]:
    ids = set()
    for edge in graph.edges:
        if edge.relation == RelationType.PRECEDES:
            ids.add(edge.src)
            ids.add(edge.dst)
    return frozenset(ids)


def expected_coupling(node: SkgNode, timeline_ids: frozenset[str]) -> CouplingClass:
    """Taxonomy classification for one node given the graph's timeline."""
    if node.kind in (NodeKind.POLICY, NodeKind.DECISION, NodeKind.EVIDENCE):
        return CouplingClass.STRONG
    keys = set(node.attributes)
    if node.kind == NodeKind.STATE and keys & _STRONG_STATE_KEYS:
        return CouplingClass.STRONG
    if node.kind == NodeKind.EVENT and node.node_id in timeline_ids:
        return CouplingClass.STRONG
    if node.kind in (NodeKind.ENTITY, NodeKind.STATE) and "complaint_type" in keys:
        return CouplingClass.STRONG
    return CouplingClass.WEAK


def classify(graph: SceneKnowledgeGraph) -> dict[str, CouplingClass]:
    """Taxonomy classification for every node, keyed by node_id."""
    timeline = _timeline_node_ids(graph)
    return {n.node_id: expected_coupling(n, timeline) for n in graph.nodes}


def partition_nodes(graph: SceneKnowledgeGraph) -> tuple[set[str], set[str]]:
    """Split node ids into (strong, weak) per the taxonomy.

    Raises CouplingMismatch when any node's stored coupling field
    disagrees with the mechanical classification.
    """
    wanted = classify(graph)
    mismatched = [n.node_id for n in graph.nodes if n.coupling != wanted[n.node_id]]
    if mismatched:
        raise CouplingMismatch(
            f"stored coupling disagrees with taxonomy for: {', '.join(sorted(mismatched))}",
            node_ids=sorted(mismatched),
        )
    strong = {nid for nid, c in wanted.items() if c == CouplingClass.STRONG}
    weak = {nid for nid, c in wanted.items() if c == CouplingClass.WEAK}
    return strong, weak


def with_recomputed_coupling(graph: SceneKnowledgeGraph) -> SceneKnowledgeGraph:
    """Return the graph with every node's coupling set from the taxonomy.

    Edits can move a node across the strong/weak boundary (adding a
    precedes edge puts an Event on the timeline), so anything that
    constructs or mutates graphs funnels through here.
    """
    wanted = classify(graph)
    nodes = tuple(
        n if n.coupling == wanted[n.node_id] else replace(n, coupling=wanted[n.node_id])
        for n in graph.nodes
    )
    return replace(graph, nodes=nodes)
