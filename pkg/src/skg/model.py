"""Core domain model: complaint cases and scene knowledge graphs.

All values are immutable after construction and safe to share across
threads. Constructors normalize field types (timestamps to UTC seconds,
attribute values to TypedValue) but do not validate cross-field
invariants; that is validate.py's job, so invalid graphs can be built,
inspected, and reported on.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import datetime
from enum import Enum
from typing import Mapping, Sequence

from .errors import SchemaError
from .values import TypedValue, coerce_timestamp, coerce_value

SCHEMA_VERSION = "1"


class NodeKind(str, Enum):
    ENTITY = "Entity"
    EVIDENCE = "Evidence"
    EVENT = "Event"
    STATE = "State"
    POLICY = "Policy"
    DECISION = "Decision"


class CouplingClass(str, Enum):
    STRONG = "Strong"
    WEAK = "Weak"


class RelationType(str, Enum):
    SUPPORTS = "supports"
    CONTRADICTS = "contradicts"
    PRECEDES = "precedes"
    OCCURS_DURING = "occurs_during"
    ATTRIBUTED_TO = "attributed_to"
    APPLIES_TO = "applies_to"
    REQUIRES = "requires"
    REFERS_TO = "refers_to"
    RESULTS_IN = "results_in"
    NEGOTIATED_IN = "negotiated_in"


class DecisionAction(str, Enum):
    REFUND = "Refund"
    COMPENSATE = "Compensate"
    TRANSFER = "Transfer"
    ESCALATE = "Escalate"
    REJECT = "Reject"
    MANUAL_REVIEW = "ManualReview"


class EvidenceMedium(str, Enum):
    SCREENSHOT = "screenshot"
    PHOTO = "photo"
    DOCUMENT = "document"
    CHAT_EXPORT = "chat_export"


class Actor(str, Enum):
    USER = "user"
    AGENT = "agent"
    MERCHANT = "merchant"
    SYSTEM = "system"


# Scene dimension vocabularies. complaint_type is an open vocabulary; the
# listed values are the sampler's default universe for variant generation.
SCENE_DIM_KEYS = (
    "complaint_type",
    "evidence_quality",
    "service_stage",
    "responsibility",
    "resolution_action",
)

COMPLAINT_TYPES = (
    "product_quality",
    "logistics_delay",
    "payment_dispute",
    "after_sales",
    "billing_error",
    "fraud_suspicion",
    "content_moderation",
)

EVIDENCE_QUALITIES = ("sufficient", "partial", "insufficient")

# Ordered: index position defines "earlier than" for timeline pruning.
SERVICE_STAGES = ("pre_sale", "pre_delivery", "post_delivery", "after_sale")

RESPONSIBILITIES = ("merchant", "platform", "user", "logistics", "shared")

EVIDENCE_VALIDITIES = ("sufficient", "insufficient", "contested")

MERCHANT_RESPONSES = ("accepted", "partial_offer", "rejected", "no_response")

ORDER_STATUSES = ("created", "paid", "shipped", "delivered", "returned", "cancelled")

VALIDITY_ATTR = "validity"
ACTION_ATTR = "action"
FINAL_ATTR = "final"
STAGE_ATTR = "stage"


def service_stage_index(stage: str) -> int:
    try:
        return SERVICE_STAGES.index(stage)
    except ValueError:
        raise SchemaError(f"unknown service stage {stage!r}") from None


def _freeze_attributes(attributes: Mapping[str, object] | None) -> dict[str, TypedValue]:
    out: dict[str, TypedValue] = {}
    for key in sorted(attributes or {}):
        if not key:
            raise SchemaError("attribute keys must be nonempty")
        out[key] = coerce_value(attributes[key], path=key)
    return out


@dataclass(frozen=True)
class PolicyClause:
    clause_id: str
    title: str
    body: str


@dataclass(frozen=True)
class InteractionRecord:
    timestamp: datetime
    actor: Actor
    text: str

    def __post_init__(self):
        object.__setattr__(self, "timestamp", coerce_timestamp(self.timestamp))
        object.__setattr__(self, "actor", Actor(self.actor))


@dataclass(frozen=True)
class EvidenceAsset:
    asset_id: str
    medium: EvidenceMedium
    uri: str
    integrity_hash: str = ""
    extracted_text: str | None = None
    captured_at: datetime | None = None

    def __post_init__(self):
        object.__setattr__(self, "medium", EvidenceMedium(self.medium))
        if self.captured_at is not None:
            object.__setattr__(self, "captured_at", coerce_timestamp(self.captured_at))


@dataclass(frozen=True)
class ComplaintCase:
    """The five-part evidence tuple behind every scene graph."""

    case_id: str
    narrative: str
    evidence_assets: tuple[EvidenceAsset, ...] = ()
    metadata: Mapping[str, TypedValue] = field(default_factory=dict)
    history: tuple[InteractionRecord, ...] = ()
    policy_clauses: tuple[PolicyClause, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "evidence_assets", tuple(self.evidence_assets))
        object.__setattr__(self, "metadata", _freeze_attributes(self.metadata))
        object.__setattr__(self, "history", tuple(self.history))
        object.__setattr__(self, "policy_clauses", tuple(self.policy_clauses))

    def asset(self, asset_id: str) -> EvidenceAsset | None:
        for asset in self.evidence_assets:
            if asset.asset_id == asset_id:
                return asset
        return None


@dataclass(frozen=True)
class SkgNode:
    node_id: str
    kind: NodeKind
    label: str
    attributes: Mapping[str, TypedValue] = field(default_factory=dict)
    coupling: CouplingClass = CouplingClass.WEAK

    def __post_init__(self):
        object.__setattr__(self, "kind", NodeKind(self.kind))
        object.__setattr__(self, "coupling", CouplingClass(self.coupling))
        object.__setattr__(self, "attributes", _freeze_attributes(self.attributes))

    def attr(self, key: str, default=None):
        return self.attributes.get(key, default)

    def with_attr(self, key: str, value: TypedValue | None) -> "SkgNode":
        attrs = dict(self.attributes)
        if value is None:
            attrs.pop(key, None)
        else:
            attrs[key] = value
        return replace(self, attributes=attrs)


@dataclass(frozen=True)
class SkgEdge:
    edge_id: str
    src: str
    dst: str
    relation: RelationType
    attributes: Mapping[str, TypedValue] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "relation", RelationType(self.relation))
        object.__setattr__(self, "attributes", _freeze_attributes(self.attributes))

    def with_attr(self, key: str, value: TypedValue | None) -> "SkgEdge":
        attrs = dict(self.attributes)
        if value is None:
            attrs.pop(key, None)
        else:
            attrs[key] = value
        return replace(self, attributes=attrs)


@dataclass(frozen=True)
class Provenance:
    """Canonical for freshly synthesized graphs, generalized for variants."""

    kind: str = "canonical"
    parent_graph_id: str = ""
    edit_log: tuple = ()

    def __post_init__(self):
        if self.kind not in ("canonical", "generalized"):
            raise SchemaError(f"unknown provenance kind {self.kind!r}")
        object.__setattr__(self, "edit_log", tuple(self.edit_log))

    @classmethod
    def canonical(cls) -> "Provenance":
        return cls(kind="canonical")

    @classmethod
    def generalized(cls, parent_graph_id: str, edit_log: Sequence) -> "Provenance":
        return cls(kind="generalized", parent_graph_id=parent_graph_id, edit_log=tuple(edit_log))


@dataclass(frozen=True)
class SceneKnowledgeGraph:
    graph_id: str
    base_case_id: str
    scene_dims: Mapping[str, str]
    nodes: tuple[SkgNode, ...] = ()
    edges: tuple[SkgEdge, ...] = ()
    provenance: Provenance = field(default_factory=Provenance.canonical)

    def __post_init__(self):
        object.__setattr__(self, "scene_dims", dict(self.scene_dims))
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))

    def node(self, node_id: str) -> SkgNode | None:
        for node in self.nodes:
            if node.node_id == node_id:
                return node
        return None

    def edge(self, edge_id: str) -> SkgEdge | None:
        for edge in self.edges:
            if edge.edge_id == edge_id:
                return edge
        return None

    def nodes_of_kind(self, kind: NodeKind) -> tuple[SkgNode, ...]:
        return tuple(n for n in self.nodes if n.kind == kind)

    def final_decision(self) -> SkgNode | None:
        """The unique Decision node flagged final, or None if absent/ambiguous."""
        finals = [
            n
            for n in self.nodes_of_kind(NodeKind.DECISION)
            if n.attr(FINAL_ATTR) is True
        ]
        return finals[0] if len(finals) == 1 else None

    def dim(self, key: str) -> str | None:
        return self.scene_dims.get(key)


@dataclass(frozen=True)
class QAItem:
    qa_id: str
    graph_id: str
    subtask: str
    question: str
    options: tuple[str, ...]
    gold_index: int

    SUBTASKS = ("evidence", "policy", "action", "routing", "responsibility", "resolution")

    def __post_init__(self):
        object.__setattr__(self, "options", tuple(self.options))
        if self.subtask not in self.SUBTASKS:
            raise SchemaError(f"unknown QA subtask {self.subtask!r}", path="subtask")
        if not 2 <= len(self.options) <= 5:
            raise SchemaError("QA items carry 2-5 options", path="options")
        if len(set(self.options)) != len(self.options):
            raise SchemaError("QA options must be pairwise distinct", path="options")
        if not 0 <= self.gold_index < len(self.options):
            raise SchemaError("gold_index out of range", path="gold_index")

    @property
    def gold_option(self) -> str:
        return self.options[self.gold_index]


@dataclass(frozen=True)
class SceneDescription:
    graph_id: str
    text: str
    coverage: Mapping[str, tuple[int, int]] = field(default_factory=dict)

    def __post_init__(self):
        cov = {k: (int(a), int(b)) for k, (a, b) in dict(self.coverage).items()}
        object.__setattr__(self, "coverage", cov)
        for node_id, (start, end) in cov.items():
            if not (0 <= start <= end <= len(self.text)):
                raise SchemaError(f"coverage span out of bounds for {node_id}", path="coverage")
