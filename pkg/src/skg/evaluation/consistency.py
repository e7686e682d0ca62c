"""Policy consistency: do predicted actions survive the rule set?

For each prediction, the predicted action replaces the final decision
(node attribute and resolution dimension together, keeping the graph
well-formed) and the blocking rules are re-checked. The score is the
fraction of predictions whose substituted graph stays consistent.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from ..diff import SetAttribute, SetDim, apply_edit_log
from ..errors import EmptyInput, NotFound, SkgError
from ..model import DecisionAction, SceneKnowledgeGraph
from ..rules.ast import ConstraintSet
from ..rules.evaluate import is_consistent


class MissingAction(SkgError):
    """A prediction carries no decision action to substitute."""


class GraphNotFound(NotFound):
    pass


@dataclass(frozen=True)
class Prediction:
    record_id: str
    predicted_index: int | None = None
    label: str | None = None
    predicted_action: str | None = None
    rationale: str = ""
    latency_ms: int = 0
    abstained: bool = False


def substitute_action(graph: SceneKnowledgeGraph, action: str) -> SceneKnowledgeGraph:
    """The graph with its final decision swapped for the predicted action."""
    DecisionAction(action)  # closed vocabulary; raises ValueError otherwise
    final = graph.final_decision()
    if final is None:
        raise GraphNotFound(f"graph {graph.graph_id} has no final decision node")
    edits = []
    if final.attr("action") != action:
        edits.append(SetAttribute("node", final.node_id, "action", action))
    if graph.dim("resolution_action") != action:
        edits.append(SetDim("resolution_action", action))
    return apply_edit_log(edits, graph) if edits else graph


def policy_consistency(
    predictions: Sequence[Prediction],
    graphs: Mapping[str, SceneKnowledgeGraph],
    rules: ConstraintSet,
) -> Fraction:
    """PC = (1/N) * |{i : substituted graph i passes the blocking rules}|.

    Abstentions count as inconsistent. ``graphs`` maps record_id to the
    record's scene graph.
    """
    if not predictions:
        raise EmptyInput("policy consistency over zero predictions is undefined")
    consistent = 0
    for pred in predictions:
        if pred.record_id not in graphs:
            raise GraphNotFound(f"no graph for record {pred.record_id}")
        if pred.abstained:
            continue
        if pred.predicted_action is None:
            raise MissingAction(f"prediction for {pred.record_id} carries no action")
        candidate = substitute_action(graphs[pred.record_id], pred.predicted_action)
        if is_consistent(candidate, rules):
            consistent += 1
    return Fraction(consistent, len(predictions))
