"""Graph diffing and edit-log replay.

An EditLog is an ordered sequence of six primitive operations. Logs are
the provenance trail for generalized graphs: applying a variant's log
to its parent must reproduce the variant's content (scene_dims, nodes,
edges). Graph identity fields are not edit targets, so replay equality
is judged on content, not on graph_id or provenance.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence, Union

from .errors import SkgError
from .model import SceneKnowledgeGraph, SkgEdge, SkgNode
from .partition import with_recomputed_coupling
from .values import TypedValue


class EditError(SkgError):
    """An edit named a target that does not exist or conflicts."""


@dataclass(frozen=True)
class AddNode:
    node: SkgNode


@dataclass(frozen=True)
class RemoveNode:
    node_id: str


@dataclass(frozen=True)
class AddEdge:
    edge: SkgEdge


@dataclass(frozen=True)
class RemoveEdge:
    edge_id: str


@dataclass(frozen=True)
class SetAttribute:
    target: str  # "node" or "edge"
    target_id: str
    key: str
    value: TypedValue | None  # None removes the key


@dataclass(frozen=True)
class SetDim:
    dim: str
    value: str


Edit = Union[AddNode, RemoveNode, AddEdge, RemoveEdge, SetAttribute, SetDim]
EditLog = tuple[Edit, ...]


def diff_graphs(a: SceneKnowledgeGraph, b: SceneKnowledgeGraph) -> EditLog:
    """Minimal ordered edits turning a's content into b's content.

    Nodes and edges pair up by id. A node whose kind or label changed
    (or an edge whose endpoints or relation changed) is replaced by a
    remove/add pair; attribute-level changes become SetAttribute
    entries. Coupling never appears in a log because it is recomputed
    from the taxonomy on apply.
    """
    a_nodes = {n.node_id: n for n in a.nodes}
    b_nodes = {n.node_id: n for n in b.nodes}
    a_edges = {e.edge_id: e for e in a.edges}
    b_edges = {e.edge_id: e for e in b.edges}

    removes_e = [RemoveEdge(eid) for eid in sorted(a_edges.keys() - b_edges.keys())]
    removes_n = [RemoveNode(nid) for nid in sorted(a_nodes.keys() - b_nodes.keys())]
    adds_n = [AddNode(b_nodes[nid]) for nid in sorted(b_nodes.keys() - a_nodes.keys())]
    adds_e = [AddEdge(b_edges[eid]) for eid in sorted(b_edges.keys() - a_edges.keys())]
    attr_ops: list[Edit] = []

    for nid in sorted(a_nodes.keys() & b_nodes.keys()):
        old, new = a_nodes[nid], b_nodes[nid]
        if old.kind != new.kind or old.label != new.label:
            removes_n.append(RemoveNode(nid))
            adds_n.append(AddNode(new))
            continue
        attr_ops.extend(_attr_diff("node", nid, old.attributes, new.attributes))

    for eid in sorted(a_edges.keys() & b_edges.keys()):
        old, new = a_edges[eid], b_edges[eid]
        if (old.src, old.dst, old.relation) != (new.src, new.dst, new.relation):
            removes_e.append(RemoveEdge(eid))
            adds_e.append(AddEdge(new))
            continue
        attr_ops.extend(_attr_diff("edge", eid, old.attributes, new.attributes))

    dim_ops = [
        SetDim(dim, b.scene_dims[dim])
        for dim in sorted(b.scene_dims)
        if a.scene_dims.get(dim) != b.scene_dims[dim]
    ]

    removes_e.sort(key=lambda op: op.edge_id)
    removes_n.sort(key=lambda op: op.node_id)
    adds_n.sort(key=lambda op: op.node.node_id)
    adds_e.sort(key=lambda op: op.edge.edge_id)
    return tuple(removes_e + removes_n + adds_n + adds_e + attr_ops + dim_ops)


def _attr_diff(target, target_id, old, new):
    for key in sorted(set(old) | set(new)):
        if key not in new:
            yield SetAttribute(target, target_id, key, None)
        elif old.get(key) != new[key]:
            yield SetAttribute(target, target_id, key, new[key])


def apply_edit_log(log: Sequence[Edit], graph: SceneKnowledgeGraph) -> SceneKnowledgeGraph:
    """Replay a log against a graph; identity fields pass through unchanged."""
    nodes = {n.node_id: n for n in graph.nodes}
    edges = {e.edge_id: e for e in graph.edges}
    node_order = [n.node_id for n in graph.nodes]
    edge_order = [e.edge_id for e in graph.edges]
    dims = dict(graph.scene_dims)

    for op in log:
        if isinstance(op, AddNode):
            if op.node.node_id in nodes:
                raise EditError(f"add_node: id {op.node.node_id} already present")
            nodes[op.node.node_id] = op.node
            node_order.append(op.node.node_id)
        elif isinstance(op, RemoveNode):
            if op.node_id not in nodes:
                raise EditError(f"remove_node: id {op.node_id} absent")
            del nodes[op.node_id]
            node_order.remove(op.node_id)
        elif isinstance(op, AddEdge):
            if op.edge.edge_id in edges:
                raise EditError(f"add_edge: id {op.edge.edge_id} already present")
            edges[op.edge.edge_id] = op.edge
            edge_order.append(op.edge.edge_id)
        elif isinstance(op, RemoveEdge):
            if op.edge_id not in edges:
                raise EditError(f"remove_edge: id {op.edge_id} absent")
            del edges[op.edge_id]
            edge_order.remove(op.edge_id)
        elif isinstance(op, SetAttribute):
            if op.target == "node":
                if op.target_id not in nodes:
                    raise EditError(f"set_attribute: node {op.target_id} absent")
                nodes[op.target_id] = nodes[op.target_id].with_attr(op.key, op.value)
            elif op.target == "edge":
                if op.target_id not in edges:
                    raise EditError(f"set_attribute: edge {op.target_id} absent")
                edges[op.target_id] = edges[op.target_id].with_attr(op.key, op.value)
            else:
                raise EditError(f"set_attribute: unknown target {op.target!r}")
        elif isinstance(op, SetDim):
            dims[op.dim] = op.value
        else:
            raise EditError(f"unknown edit op {type(op).__name__}")

    result = replace(
        graph,
        nodes=tuple(nodes[nid] for nid in node_order),
        edges=tuple(edges[eid] for eid in edge_order),
        scene_dims=dims,
    )
    return with_recomputed_coupling(result)
