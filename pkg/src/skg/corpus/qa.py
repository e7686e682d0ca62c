"""Decision-oriented QA generation from scene graphs.

Golds come straight from graph state; distractors are drawn from the
remaining enum values with a seeded generator and the option order is
shuffled by the same seed, so a (graph, subtask, seed) triple always
builds the same item.
"""

from __future__ import annotations

import hashlib
import random

from ..errors import SkgError
from ..model import (
    RESPONSIBILITIES,
    DecisionAction,
    NodeKind,
    QAItem,
    SceneKnowledgeGraph,
)

TEXT_SUBTASKS = ("evidence", "policy", "action")
MM_SUBTASKS = ("routing", "responsibility", "resolution")

# Desk routing is a fixed function of complaint type.
ROUTING_TABLE = {
    "product_quality": "quality_inspection",
    "logistics_delay": "logistics_desk",
    "payment_dispute": "payments_desk",
    "after_sales": "after_sales_desk",
    "billing_error": "billing_desk",
    "fraud_suspicion": "risk_desk",
    "content_moderation": "content_ops",
}

_QUESTIONS = {
    "evidence": "Is the evidence on file sufficient to support the complainant's claim?",
    "policy": "Does policy {policy} apply to this case?",
    "action": "Which resolution action should be taken for this case?",
    "routing": "Which desk should this complaint be routed to?",
    "responsibility": "Which party bears responsibility for this complaint?",
    "resolution": "Given the full evidence, which final resolution should the platform take?",
}

# Mean options-per-item: binary subtasks carry 2, the rest 4.
_CHOICE_POOLS = {
    "action": tuple(a.value for a in DecisionAction),
    "resolution": tuple(a.value for a in DecisionAction),
    "routing": tuple(sorted(set(ROUTING_TABLE.values()))),
    "responsibility": RESPONSIBILITIES,
}


class MissingAttribute(SkgError):
    """The graph lacks the state a subtask asks about."""


def _rng(graph_id: str, subtask: str, seed: int) -> random.Random:
    key = f"{graph_id}\x1f{subtask}\x1f{seed}"
    return random.Random(int.from_bytes(hashlib.sha256(key.encode()).digest()[:8], "big"))


def _binary_item(graph_id, subtask, question, gold, other, rng, seed) -> QAItem:
    options = [gold, other]
    rng.shuffle(options)
    return QAItem(
        qa_id=f"{graph_id}:{subtask}:{seed}",
        graph_id=graph_id,
        subtask=subtask,
        question=question,
        options=options,
        gold_index=options.index(gold),
    )


def _choice_item(graph_id, subtask, question, gold, pool, rng, seed, n_options=4) -> QAItem:
    distractors = rng.sample([v for v in pool if v != gold], n_options - 1)
    options = [gold, *distractors]
    rng.shuffle(options)
    return QAItem(
        qa_id=f"{graph_id}:{subtask}:{seed}",
        graph_id=graph_id,
        subtask=subtask,
        question=question,
        options=options,
        gold_index=options.index(gold),
    )


def build_qa(graph: SceneKnowledgeGraph, subtask: str, rng_seed: int = 0) -> QAItem:
    """One QA item for the given subtask; raises MissingAttribute when the
    graph does not carry the queried dimension."""
    rng = _rng(graph.graph_id, subtask, rng_seed)

    if subtask == "evidence":
        quality = graph.dim("evidence_quality")
        if quality is None:
            raise MissingAttribute("graph carries no evidence_quality dimension")
        gold = "sufficient" if quality == "sufficient" else "insufficient"
        other = "insufficient" if gold == "sufficient" else "sufficient"
        return _binary_item(
            graph.graph_id, subtask, _QUESTIONS["evidence"], gold, other, rng, rng_seed
        )

    if subtask == "policy":
        policies = sorted(graph.nodes_of_kind(NodeKind.POLICY), key=lambda n: n.node_id)
        if not policies:
            raise MissingAttribute("graph has no policy nodes")
        node = policies[rng.randrange(len(policies))]
        gold = "applies" if node.attr("applies") is True else "does not apply"
        other = "does not apply" if gold == "applies" else "applies"
        question = _QUESTIONS["policy"].format(policy=node.label)
        return _binary_item(graph.graph_id, subtask, question, gold, other, rng, rng_seed)

    if subtask in ("action", "resolution"):
        final = graph.final_decision()
        if final is None or not isinstance(final.attr("action"), str):
            raise MissingAttribute("graph has no final decision action")
        return _choice_item(
            graph.graph_id,
            subtask,
            _QUESTIONS[subtask],
            final.attr("action"),
            _CHOICE_POOLS[subtask],
            rng,
            rng_seed,
        )

    if subtask == "routing":
        ctype = graph.dim("complaint_type")
        if ctype not in ROUTING_TABLE:
            raise MissingAttribute(f"no routing rule for complaint type {ctype!r}")
        return _choice_item(
            graph.graph_id,
            subtask,
            _QUESTIONS["routing"],
            ROUTING_TABLE[ctype],
            _CHOICE_POOLS["routing"],
            rng,
            rng_seed,
        )

    if subtask == "responsibility":
        responsibility = graph.dim("responsibility")
        if responsibility is None:
            raise MissingAttribute("graph carries no responsibility dimension")
        return _choice_item(
            graph.graph_id,
            subtask,
            _QUESTIONS["responsibility"],
            responsibility,
            _CHOICE_POOLS["responsibility"],
            rng,
            rng_seed,
        )

    raise MissingAttribute(f"unknown subtask {subtask!r}")


def applicable_subtasks(graph: SceneKnowledgeGraph, pool) -> list[str]:
    out = []
    for subtask in pool:
        try:
            build_qa(graph, subtask, 0)
        except MissingAttribute:
            continue
        out.append(subtask)
    return out


def sample_qa_items(
    graph: SceneKnowledgeGraph,
    seed: int = 0,
    *,
    text: bool = True,
    mm: bool = True,
) -> list[QAItem]:
    """2-3 text items and 2-3 multimodal items per graph.

    The three-item probabilities (0.28 text, 0.64 multimodal) put the
    expected counts at 2.28 and 2.64 per case, matching the published
    benchmark ratios.
    """
    rng = _rng(graph.graph_id, "sample", seed)
    items: list[QAItem] = []
    plans = []
    if text:
        plans.append((TEXT_SUBTASKS, 0.28))
    if mm:
        plans.append((MM_SUBTASKS, 0.64))
    for pool, p_three in plans:
        available = applicable_subtasks(graph, pool)
        if not available:
            continue
        count = 3 if rng.random() < p_three else 2
        count = min(count, len(available))
        chosen = rng.sample(available, count)
        for subtask in sorted(chosen):
            items.append(build_qa(graph, subtask, rng_seed=seed))
    return items
