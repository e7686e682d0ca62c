"""Structural validation for cases and scene knowledge graphs.

validate_graph reports every violated invariant as data rather than
raising; callers that need a hard guarantee wrap the result in
require_valid. Violation codes are stable strings consumed by the
verification loop and the review API.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter

from .errors import InvalidGraph
from .model import (
    ACTION_ATTR,
    EVIDENCE_QUALITIES,
    EVIDENCE_VALIDITIES,
    FINAL_ATTR,
    RESPONSIBILITIES,
    SCENE_DIM_KEYS,
    SERVICE_STAGES,
    VALIDITY_ATTR,
    ComplaintCase,
    DecisionAction,
    NodeKind,
    RelationType,
    SceneKnowledgeGraph,
)
from .partition import classify


@dataclass(frozen=True)
class StructuralViolation:
    code: str
    message: str
    node_ids: tuple[str, ...] = ()
    edge_ids: tuple[str, ...] = ()


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple[StructuralViolation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> set[str]:
        return {v.code for v in self.violations}


@dataclass
class _Collector:
    violations: list[StructuralViolation] = field(default_factory=list)

    def add(self, code, message, node_ids=(), edge_ids=()):
        self.violations.append(
            StructuralViolation(code, message, tuple(node_ids), tuple(edge_ids))
        )


_DIM_VOCABS = {
    "evidence_quality": EVIDENCE_QUALITIES,
    "service_stage": SERVICE_STAGES,
    "responsibility": RESPONSIBILITIES,
    "resolution_action": tuple(a.value for a in DecisionAction),
}


def validate_graph(graph: SceneKnowledgeGraph) -> ValidationResult:
    """Check every structural invariant; ok iff zero violations."""
    out = _Collector()

    if not graph.graph_id:
        out.add("empty-graph-id", "graph_id must be nonempty")
    if not graph.base_case_id:
        out.add("empty-base-case-id", "base_case_id must be nonempty")

    node_ids: dict[str, int] = {}
    for node in graph.nodes:
        node_ids[node.node_id] = node_ids.get(node.node_id, 0) + 1
    dupes = sorted(nid for nid, n in node_ids.items() if n > 1)
    if dupes:
        out.add("duplicate-node-id", f"node ids repeated: {', '.join(dupes)}", node_ids=dupes)

    edge_ids: dict[str, int] = {}
    for edge in graph.edges:
        edge_ids[edge.edge_id] = edge_ids.get(edge.edge_id, 0) + 1
    dupes = sorted(eid for eid, n in edge_ids.items() if n > 1)
    if dupes:
        out.add("duplicate-edge-id", f"edge ids repeated: {', '.join(dupes)}", edge_ids=dupes)

    for node in graph.nodes:
        if not node.node_id:
            out.add("empty-node-id", "node_id must be nonempty")
        if not node.label:
            out.add("empty-label", f"node {node.node_id} has an empty label", node_ids=[node.node_id])
        if node.kind == NodeKind.EVIDENCE:
            validity = node.attr(VALIDITY_ATTR)
            if validity not in EVIDENCE_VALIDITIES:
                out.add(
                    "evidence-missing-validity",
                    f"evidence node {node.node_id} needs validity in {EVIDENCE_VALIDITIES}",
                    node_ids=[node.node_id],
                )
        if node.kind == NodeKind.DECISION:
            action = node.attr(ACTION_ATTR)
            if not isinstance(action, str) or action not in {a.value for a in DecisionAction}:
                out.add(
                    "decision-missing-action",
                    f"decision node {node.node_id} needs a DecisionAction action attribute",
                    node_ids=[node.node_id],
                )

    known = set(node_ids)
    for edge in graph.edges:
        missing = [e for e in (edge.src, edge.dst) if e not in known]
        if missing:
            out.add(
                "dangling-endpoint",
                f"edge {edge.edge_id} references absent node(s): {', '.join(missing)}",
                edge_ids=[edge.edge_id],
            )
        if edge.src == edge.dst and edge.relation != RelationType.REFERS_TO:
            out.add(
                "self-loop",
                f"edge {edge.edge_id} loops on {edge.src} with relation {edge.relation.value}",
                edge_ids=[edge.edge_id],
            )
        if edge.relation in (RelationType.SUPPORTS, RelationType.CONTRADICTS):
            src = graph.node(edge.src)
            if src is not None and src.kind not in (NodeKind.EVIDENCE, NodeKind.EVENT):
                out.add(
                    "support-origin",
                    f"edge {edge.edge_id}: {edge.relation.value} must originate from Evidence or Event",
                    edge_ids=[edge.edge_id],
                )

    _check_precedes_acyclic(graph, out)
    _check_decision_shape(graph, out)
    _check_kind_population(graph, out)
    _check_scene_dims(graph, out)
    _check_provenance(graph, out)
    _check_coupling(graph, out)

    return ValidationResult(tuple(out.violations))


def _check_precedes_acyclic(graph, out):
    sorter = TopologicalSorter()
    for edge in graph.edges:
        if edge.relation == RelationType.PRECEDES:
            sorter.add(edge.dst, edge.src)
    try:
        sorter.prepare()
    except CycleError as exc:
        cycle = [str(n) for n in exc.args[1]]
        out.add("precedes-cycle", f"precedes edges form a cycle: {' -> '.join(cycle)}", node_ids=cycle)


def _check_decision_shape(graph, out):
    finals = [
        n for n in graph.nodes_of_kind(NodeKind.DECISION) if n.attr(FINAL_ATTR) is True
    ]
    if len(finals) > 1:
        ids = sorted(n.node_id for n in finals)
        out.add("multiple-final-decisions", f"{len(finals)} decision nodes marked final", node_ids=ids)
    elif not finals:
        out.add("missing-final-decision", "exactly one decision node must carry final=true")
    else:
        action = finals[0].attr(ACTION_ATTR)
        wanted = graph.dim("resolution_action")
        if isinstance(action, str) and wanted is not None and action != wanted:
            out.add(
                "final-action-dim-mismatch",
                f"final decision action {action!r} != scene_dims.resolution_action {wanted!r}",
                node_ids=[finals[0].node_id],
            )


def _check_kind_population(graph, out):
    if not graph.nodes_of_kind(NodeKind.ENTITY):
        out.add("missing-entity-node", "graph needs at least one Entity node")
    if not graph.nodes_of_kind(NodeKind.STATE):
        out.add("missing-state-node", "graph needs at least one State node")


def _check_scene_dims(graph, out):
    for key in SCENE_DIM_KEYS:
        value = graph.scene_dims.get(key)
        if not isinstance(value, str) or not value:
            out.add("scene-dim-missing", f"scene_dims.{key} must be a nonempty string")
            continue
        vocab = _DIM_VOCABS.get(key)
        if vocab is not None and value not in vocab:
            out.add(
                "scene-dim-unknown-value",
                f"scene_dims.{key}={value!r} not in {vocab}",
            )
    for key in graph.scene_dims:
        if key not in SCENE_DIM_KEYS:
            out.add("scene-dim-unknown-key", f"unknown scene dimension {key!r}")


def _check_provenance(graph, out):
    prov = graph.provenance
    if prov.kind == "generalized":
        if not prov.parent_graph_id:
            out.add("generalized-missing-parent", "generalized provenance needs parent_graph_id")
        if not prov.edit_log:
            out.add("generalized-empty-edit-log", "generalized provenance needs a nonempty edit_log")


def _check_coupling(graph, out):
    if any(n > 1 for n in __node_counts(graph).values()):
        return  # duplicate ids make the taxonomy ambiguous; already reported
    wanted = classify(graph)
    bad = sorted(n.node_id for n in graph.nodes if n.coupling != wanted[n.node_id])
    if bad:
        out.add(
            "coupling-mismatch",
            f"stored coupling disagrees with taxonomy for: {', '.join(bad)}",
            node_ids=bad,
        )


def __node_counts(graph):
    counts: dict[str, int] = {}
    for node in graph.nodes:
        counts[node.node_id] = counts.get(node.node_id, 0) + 1
    return counts


def require_valid(graph: SceneKnowledgeGraph) -> SceneKnowledgeGraph:
    """Raise InvalidGraph unless the graph passes validation."""
    result = validate_graph(graph)
    if not result.ok:
        codes = ", ".join(sorted(result.codes()))
        raise InvalidGraph(f"graph {graph.graph_id} is invalid: {codes}", result.violations)
    return graph


def validate_case(case: ComplaintCase) -> ValidationResult:
    """Check complaint-case invariants (id, history order, clause shape)."""
    out = _Collector()
    if not case.case_id:
        out.add("empty-case-id", "case_id must be nonempty")
    seen: set[str] = set()
    for asset in case.evidence_assets:
        if asset.asset_id in seen:
            out.add("duplicate-asset-id", f"asset id {asset.asset_id} repeated")
        seen.add(asset.asset_id)
    previous = None
    for record in case.history:
        if previous is not None and record.timestamp < previous:
            out.add(
                "history-order",
                f"history timestamps decrease at {record.timestamp.isoformat()}",
            )
            break
        previous = record.timestamp
    for clause in case.policy_clauses:
        if not clause.clause_id or not clause.body:
            out.add("empty-policy-clause", "policy clauses need clause_id and body")
    return ValidationResult(tuple(out.violations))
