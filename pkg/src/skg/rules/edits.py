"""Rule-consistent graph generalization.

A variant is produced in three steps: a seed edit that changes the
requested dimension, a closure pass that repairs strongly coupled nodes
until the graph satisfies the blocking rules again, and a final
validate-and-check gate. Repairs come from a fixed ordered table so
every variant is deterministic and auditable; requests the table cannot
repair fail loudly with UnsatisfiableEdit rather than being dropped.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, replace

from ..diff import AddEdge, Edit, EditLog, RemoveEdge, RemoveNode, SetAttribute, SetDim, apply_edit_log
from ..errors import InvalidGraph, SkgError
from ..model import (
    COMPLAINT_TYPES,
    EVIDENCE_QUALITIES,
    EVIDENCE_VALIDITIES,
    MERCHANT_RESPONSES,
    ORDER_STATUSES,
    RESPONSIBILITIES,
    SERVICE_STAGES,
    DecisionAction,
    NodeKind,
    Provenance,
    RelationType,
    SceneKnowledgeGraph,
    service_stage_index,
)
from ..validate import validate_graph
from .ast import ConstraintSet
from .evaluate import is_consistent


class UnsatisfiableEdit(SkgError):
    """No repair sequence within budget makes the edited graph consistent."""

    def __init__(self, message: str, violations=None):
        super().__init__(message)
        self.violations = list(violations or [])


class IdenticalVariant(SkgError):
    """The requested edit produced a graph canonically equal to its parent."""


class InsufficientVariation(SkgError):
    """Fewer admissible edit requests exist than were asked for."""


@dataclass(frozen=True)
class EditRequest:
    dimension: str
    value: str
    rng_seed: int = 0


# Actions that commit the platform to a remedy and therefore demand
# sufficient evidence; used by the first repair rule.
PAYOUT_ACTIONS = (
    DecisionAction.REFUND.value,
    DecisionAction.COMPENSATE.value,
    DecisionAction.TRANSFER.value,
)

EDITABLE_DIMENSIONS = (
    "complaint_type",
    "evidence_quality",
    "evidence_validity",
    "event_relation",
    "merchant_response",
    "resolution_action",
    "responsibility",
    "service_stage",
    "state_variable",
)

_EVENT_RELATION_VALUES = (RelationType.PRECEDES.value, RelationType.OCCURS_DURING.value)

# Default fan-out per base case, sized to the observed variant-to-case
# expansion ratio of roughly eight to one.
DEFAULT_VARIANTS_PER_CASE = 8


def validities_for_quality(quality: str, count: int) -> list[str]:
    """Per-evidence validity assignment realizing an evidence_quality value."""
    if quality == "sufficient":
        return ["sufficient"] * count
    if quality == "insufficient":
        return ["insufficient"] * count
    if quality == "partial":
        if count < 2:
            raise UnsatisfiableEdit("partial evidence quality needs at least two assets")
        return ["sufficient"] + ["insufficient"] * (count - 1)
    raise UnsatisfiableEdit(f"unknown evidence quality {quality!r}")


def quality_for_validity(validity: str) -> str:
    """The evidence_quality dimension implied by a uniform validity edit."""
    return {"sufficient": "sufficient", "insufficient": "insufficient", "contested": "partial"}[
        validity
    ]


def _sorted_nodes(graph, kind):
    return sorted(graph.nodes_of_kind(kind), key=lambda n: n.node_id)


def _states_with(graph, key):
    return [n for n in _sorted_nodes(graph, NodeKind.STATE) if key in n.attributes]


def _carriers_of_complaint_type(graph):
    out = []
    for node in sorted(graph.nodes, key=lambda n: n.node_id):
        if node.kind in (NodeKind.ENTITY, NodeKind.STATE) and "complaint_type" in node.attributes:
            out.append(node)
    return out


def _event_relation_edges(graph):
    kinds = {n.node_id: n.kind for n in graph.nodes}
    return sorted(
        (
            e
            for e in graph.edges
            if e.relation.value in _EVENT_RELATION_VALUES
            and kinds.get(e.src) == NodeKind.EVENT
            and kinds.get(e.dst) == NodeKind.EVENT
        ),
        key=lambda e: e.edge_id,
    )


def _admissible_values(graph: SceneKnowledgeGraph, dimension: str) -> list[str]:
    evidence = _sorted_nodes(graph, NodeKind.EVIDENCE)
    if dimension == "complaint_type":
        current = graph.dim("complaint_type")
        return [v for v in COMPLAINT_TYPES if v != current]
    if dimension == "evidence_quality":
        if not evidence:
            return []
        current = graph.dim("evidence_quality")
        values = [v for v in EVIDENCE_QUALITIES if v != current]
        if len(evidence) < 2 and "partial" in values:
            values.remove("partial")
        return values
    if dimension == "evidence_validity":
        if not evidence:
            return []
        out = []
        for v in EVIDENCE_VALIDITIES:
            if any(node.attr("validity") != v for node in evidence):
                out.append(v)
        return out
    if dimension == "event_relation":
        candidates = _event_relation_edges(graph)
        return [v for v in _EVENT_RELATION_VALUES if any(e.relation.value != v for e in candidates)]
    if dimension == "merchant_response":
        states = _states_with(graph, "merchant_response")
        if not states:
            return []
        current = states[0].attr("merchant_response")
        return [v for v in MERCHANT_RESPONSES if v != current]
    if dimension == "resolution_action":
        current = graph.dim("resolution_action")
        return [a.value for a in DecisionAction if a.value != current]
    if dimension == "responsibility":
        current = graph.dim("responsibility")
        return [v for v in RESPONSIBILITIES if v != current]
    if dimension == "service_stage":
        current = graph.dim("service_stage")
        return [v for v in SERVICE_STAGES if v != current]
    if dimension == "state_variable":
        states = _states_with(graph, "order_status")
        if not states:
            return []
        current = states[0].attr("order_status")
        return [v for v in ORDER_STATUSES if v != current]
    raise UnsatisfiableEdit(f"unknown edit dimension {dimension!r}")


def admissible_requests(graph: SceneKnowledgeGraph) -> list[tuple[str, str]]:
    """All (dimension, value) pairs that would change this graph, sorted."""
    pairs = []
    for dimension in EDITABLE_DIMENSIONS:
        for value in _admissible_values(graph, dimension):
            pairs.append((dimension, value))
    return sorted(pairs)


def seed_edits(graph: SceneKnowledgeGraph, request: EditRequest) -> list[Edit]:
    """Primitive edits that realize the requested dimension change.

    Returns an empty list when the request matches the graph's current
    state (the caller turns that into IdenticalVariant).
    """
    dim, value = request.dimension, request.value
    if dim not in EDITABLE_DIMENSIONS:
        raise UnsatisfiableEdit(f"unknown edit dimension {dim!r}")
    edits: list[Edit] = []

    if dim == "complaint_type":
        for node in _carriers_of_complaint_type(graph):
            if node.attr("complaint_type") != value:
                edits.append(SetAttribute("node", node.node_id, "complaint_type", value))
        if graph.dim(dim) != value:
            edits.append(SetDim(dim, value))
        return edits

    if dim == "evidence_quality":
        evidence = _sorted_nodes(graph, NodeKind.EVIDENCE)
        if not evidence:
            raise UnsatisfiableEdit("no evidence nodes to edit")
        for node, validity in zip(evidence, validities_for_quality(value, len(evidence))):
            if node.attr("validity") != validity:
                edits.append(SetAttribute("node", node.node_id, "validity", validity))
        if graph.dim(dim) != value:
            edits.append(SetDim(dim, value))
        return edits

    if dim == "evidence_validity":
        evidence = _sorted_nodes(graph, NodeKind.EVIDENCE)
        if not evidence:
            raise UnsatisfiableEdit("no evidence nodes to edit")
        for node in evidence:
            if node.attr("validity") != value:
                edits.append(SetAttribute("node", node.node_id, "validity", value))
        implied = quality_for_validity(value)
        if edits and graph.dim("evidence_quality") != implied:
            edits.append(SetDim("evidence_quality", implied))
        return edits

    if dim == "event_relation":
        for edge in _event_relation_edges(graph):
            if edge.relation.value != value:
                edits.append(RemoveEdge(edge.edge_id))
                edits.append(AddEdge(replace(edge, relation=RelationType(value))))
                return edits
        return []

    if dim == "merchant_response":
        for node in _states_with(graph, "merchant_response"):
            if node.attr("merchant_response") != value:
                edits.append(SetAttribute("node", node.node_id, "merchant_response", value))
        return edits

    if dim == "resolution_action":
        final = graph.final_decision()
        if final is None:
            raise UnsatisfiableEdit("graph has no final decision node")
        if final.attr("action") != value:
            edits.append(SetAttribute("node", final.node_id, "action", value))
        if graph.dim(dim) != value:
            edits.append(SetDim(dim, value))
        return edits

    if dim == "responsibility":
        for node in _states_with(graph, "responsibility"):
            if node.attr("responsibility") != value:
                edits.append(SetAttribute("node", node.node_id, "responsibility", value))
        if graph.dim(dim) != value:
            edits.append(SetDim(dim, value))
        return edits

    if dim == "service_stage":
        for node in _states_with(graph, "service_stage"):
            if node.attr("service_stage") != value:
                edits.append(SetAttribute("node", node.node_id, "service_stage", value))
        if graph.dim(dim) != value:
            edits.append(SetDim(dim, value))
        return edits

    if dim == "state_variable":
        for node in _states_with(graph, "order_status"):
            if node.attr("order_status") != value:
                edits.append(SetAttribute("node", node.node_id, "order_status", value))
        return edits

    raise UnsatisfiableEdit(f"unhandled edit dimension {dim!r}")  # pragma: no cover


# ---------------------------------------------------------------------------
# repair table (ordered; each repair is idempotent and touches strong nodes only)


def _repair_decision_sufficiency(graph) -> list[Edit]:
    # evidence sufficiency lost under a payout decision -> route to manual review
    final = graph.final_decision()
    if final is None or final.attr("action") not in PAYOUT_ACTIONS:
        return []
    evidence = _sorted_nodes(graph, NodeKind.EVIDENCE)
    if not evidence or all(n.attr("validity") == "sufficient" for n in evidence):
        return []
    target = DecisionAction.MANUAL_REVIEW.value
    return [
        SetAttribute("node", final.node_id, "action", target),
        SetDim("resolution_action", target),
    ]


def _repair_stage_pruning(graph) -> list[Edit]:
    # timeline events later than the service stage are pruned (with their edges)
    stage = graph.dim("service_stage")
    if stage is None:
        return []
    stage_idx = service_stage_index(stage)
    timeline_ids = set()
    for edge in graph.edges:
        if edge.relation == RelationType.PRECEDES:
            timeline_ids.add(edge.src)
            timeline_ids.add(edge.dst)
    doomed = []
    for node in _sorted_nodes(graph, NodeKind.EVENT):
        node_stage = node.attr("stage")
        if node.node_id not in timeline_ids or not isinstance(node_stage, str):
            continue
        if service_stage_index(node_stage) > stage_idx:
            doomed.append(node.node_id)
    if not doomed:
        return []
    doomed_set = set(doomed)
    edits: list[Edit] = [
        RemoveEdge(e.edge_id)
        for e in sorted(graph.edges, key=lambda e: e.edge_id)
        if e.src in doomed_set or e.dst in doomed_set
    ]
    edits.extend(RemoveNode(nid) for nid in doomed)
    return edits


def _repair_reattribution(graph) -> list[Edit]:
    # attributed_to edges follow the responsible party
    responsibility = graph.dim("responsibility")
    if responsibility is None:
        return []
    parties = {
        n.node_id: n.attr("party")
        for n in graph.nodes_of_kind(NodeKind.ENTITY)
        if isinstance(n.attr("party"), str)
    }
    targets = sorted(nid for nid, party in parties.items() if party == responsibility)
    if not targets:
        return []
    target = targets[0]
    edits: list[Edit] = []
    for edge in sorted(graph.edges, key=lambda e: e.edge_id):
        if edge.relation != RelationType.ATTRIBUTED_TO:
            continue
        party = parties.get(edge.dst)
        if party is not None and party != responsibility:
            edits.append(RemoveEdge(edge.edge_id))
            edits.append(AddEdge(replace(edge, dst=target)))
    return edits


def _repair_policy_escalation(graph) -> list[Edit]:
    # a policy the decision requires no longer applies -> escalate or reject
    final = graph.final_decision()
    if final is None:
        return []
    policy_ids = {n.node_id for n in graph.nodes_of_kind(NodeKind.POLICY)}
    required = {
        e.dst
        for e in graph.edges
        if e.relation == RelationType.REQUIRES and e.src == final.node_id and e.dst in policy_ids
    }
    flipped = any(
        graph.node(pid) is not None and graph.node(pid).attr("applies") is False for pid in required
    )
    if not flipped:
        return []
    contested = any(
        n.attr("validity") == "contested" for n in graph.nodes_of_kind(NodeKind.EVIDENCE)
    )
    target = DecisionAction.ESCALATE.value if contested else DecisionAction.REJECT.value
    if final.attr("action") == target:
        return []
    return [
        SetAttribute("node", final.node_id, "action", target),
        SetDim("resolution_action", target),
    ]


_REPAIRS = (
    _repair_decision_sufficiency,
    _repair_stage_pruning,
    _repair_reattribution,
    _repair_policy_escalation,
)

CLOSURE_EDIT_BUDGET = 12


def closure(
    graph: SceneKnowledgeGraph,
    rules: ConstraintSet,
    seed_log,
    budget: int = CLOSURE_EDIT_BUDGET,
) -> EditLog:
    """Extend a seed edit with repairs until the graph is consistent.

    Returns the seed unchanged when it already yields a consistent
    graph; raises UnsatisfiableEdit when the repair table cannot restore
    consistency within the primitive-edit budget.
    """
    current = apply_edit_log(seed_log, graph)
    log: list[Edit] = list(seed_log)
    if is_consistent(current, rules):
        return tuple(log)
    added = 0
    while True:
        progressed = False
        for repair in _REPAIRS:
            edits = repair(current)
            if not edits:
                continue
            added += len(edits)
            if added > budget:
                raise UnsatisfiableEdit(
                    f"repair budget of {budget} primitive edits exhausted"
                )
            current = apply_edit_log(edits, current)
            log.extend(edits)
            progressed = True
            if is_consistent(current, rules):
                return tuple(log)
        if not progressed:
            from .evaluate import evaluate

            remaining = [v for v in evaluate(current, rules) if v.severity == "blocking"]
            raise UnsatisfiableEdit(
                "no repair applies to the remaining violations: "
                + ", ".join(v.rule_id for v in remaining),
                violations=remaining,
            )


def _variant_graph_id(graph: SceneKnowledgeGraph, request: EditRequest) -> str:
    seed = f"{graph.graph_id}\x1f{request.dimension}\x1f{request.value}\x1f{request.rng_seed}"
    return f"{graph.graph_id}.g{hashlib.sha256(seed.encode('utf-8')).hexdigest()[:8]}"


def generalize(
    graph: SceneKnowledgeGraph,
    rules: ConstraintSet,
    request: EditRequest,
) -> tuple[SceneKnowledgeGraph, EditLog]:
    """Produce a rule-consistent variant differing in the requested dimension.

    Deterministic given (graph, rules, request): the variant id, edit
    log, and content depend only on those inputs.
    """
    from ..canonical import content_equal
    from ..validate import require_valid

    require_valid(graph)
    if not is_consistent(graph, rules):
        raise InvalidGraph(f"parent graph {graph.graph_id} is inconsistent under the rule set")

    seed = seed_edits(graph, request)
    if not seed:
        raise IdenticalVariant(
            f"{request.dimension}={request.value} matches the graph's current state"
        )
    log = closure(graph, rules, seed)
    edited = apply_edit_log(log, graph)
    if content_equal(edited, graph):
        raise IdenticalVariant("edit and repairs cancelled out; variant equals parent")

    variant = replace(
        edited,
        graph_id=_variant_graph_id(graph, request),
        provenance=Provenance.generalized(graph.graph_id, log),
    )
    result = validate_graph(variant)
    if not result.ok:
        raise UnsatisfiableEdit(
            f"edited graph fails validation: {', '.join(sorted(result.codes()))}",
            violations=result.violations,
        )
    if not is_consistent(variant, rules):  # pragma: no cover - closure guarantees this
        raise UnsatisfiableEdit("edited graph is inconsistent after closure")
    return variant, log


def sample_edits(
    graph: SceneKnowledgeGraph,
    rules: ConstraintSet,
    n: int,
    seed: int,
) -> list[EditRequest]:
    """n distinct edit requests, dimension drawn uniformly per pick.

    Dimensions and values are fed to the generator in lexicographic
    order, so a given (graph, n, seed) always yields the same requests.
    The rule set is accepted for interface symmetry with generalize;
    admissibility is purely structural.
    """
    del rules
    if n < 1:
        raise ValueError("n must be >= 1")
    pools: dict[str, list[str]] = {}
    for dimension, value in admissible_requests(graph):
        pools.setdefault(dimension, []).append(value)
    total = sum(len(values) for values in pools.values())
    if total < n:
        raise InsufficientVariation(f"only {total} admissible requests exist, {n} asked")
    rng = random.Random(seed)
    picked: list[EditRequest] = []
    while len(picked) < n:
        dims = sorted(d for d, values in pools.items() if values)
        dimension = dims[rng.randrange(len(dims))]
        values = pools[dimension]
        value = values.pop(rng.randrange(len(values)))
        picked.append(EditRequest(dimension, value, rng_seed=rng.randrange(2**31)))
    return picked
