"""Scene knowledge graph toolkit for complaint decision support."""

from .model import (
    Actor,
    ComplaintCase,
    CouplingClass,
    DecisionAction,
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

__version__ = "0.1.0"

__all__ = [
    "Actor",
    "ComplaintCase",
    "CouplingClass",
    "DecisionAction",
    "EvidenceAsset",
    "EvidenceMedium",
    "InteractionRecord",
    "NodeKind",
    "PolicyClause",
    "Provenance",
    "QAItem",
    "RelationType",
    "SceneDescription",
    "SceneKnowledgeGraph",
    "SkgEdge",
    "SkgNode",
    "__version__",
]
