"""Deterministic synthetic complaint data.

Seeded generators for complaint cases and their scene knowledge graphs,
used by the demo pipeline, the scripted model client, and every
property sweep that needs a supply of valid graphs. Everything here is
a pure function of (seed, index, knobs): the same inputs rebuild the
same case and graph byte for byte.
"""

from __future__ import annotations

import hashlib
import random
from datetime import datetime, timedelta, timezone
from decimal import Decimal

from .model import (
    COMPLAINT_TYPES,
    EVIDENCE_QUALITIES,
    MERCHANT_RESPONSES,
    RESPONSIBILITIES,
    SERVICE_STAGES,
    Actor,
    ComplaintCase,
    DecisionAction,
    EvidenceAsset,
    EvidenceMedium,
    InteractionRecord,
    NodeKind,
    PolicyClause,
    RelationType,
    SceneKnowledgeGraph,
    SkgEdge,
    SkgNode,
    service_stage_index,
)
from .partition import with_recomputed_coupling

_EPOCH = datetime(2024, 1, 1, tzinfo=timezone.utc)

_MERCHANTS = ("Northwind Outlet", "Lumen Electronics", "Prime Pantry Co", "Vela Fashion", "Café Müller")

_PRODUCTS = ("espresso machine", "running shoes", "phone case", "desk lamp", "wool blanket")

_NARRATIVES = {
    "product_quality": "I received the {product} from {merchant} and it arrived damaged. Order {order} should be covered.",
    "logistics_delay": "My order {order} from {merchant} is two weeks late and tracking has not moved.",
    "payment_dispute": "I was charged twice for order {order} at {merchant} and only received one {product}.",
    "after_sales": "The {product} from order {order} broke within a week and {merchant} ignores my repair request.",
    "billing_error": "Invoice for order {order} lists a {product} I never bought from {merchant}.",
    "fraud_suspicion": "Someone placed order {order} at {merchant} using my account; I never bought a {product}.",
    "content_moderation": "The listing behind order {order} at {merchant} shows misleading photos of the {product}.",
}

_POLICY_LIBRARY = (
    ("pol-refund-7d", "Seven-day refund window", "Physical goods may be returned for a full refund within seven days of delivery when evidence of the defect is provided."),
    ("pol-double-charge", "Duplicate charge reversal", "Verified duplicate charges are reversed to the original payment method within three business days."),
    ("pol-late-delivery", "Late delivery compensation", "Deliveries exceeding the promised window by more than five days qualify for shipping compensation."),
    ("pol-account-takeover", "Account takeover handling", "Suspected unauthorized orders are frozen and escalated to the risk desk for identity verification."),
    ("pol-listing-accuracy", "Listing accuracy", "Listings must match the delivered item; mismatches qualify for return at merchant expense."),
)

_SPECIALIST_TYPES = ("fraud_suspicion", "content_moderation")


def _rng_for(seed: int, *parts) -> random.Random:
    key = "\x1f".join([str(seed), *map(str, parts)])
    return random.Random(int.from_bytes(hashlib.sha256(key.encode()).digest()[:8], "big"))


def synthetic_case(index: int, seed: int = 0) -> ComplaintCase:
    """Build one deterministic complaint case."""
    rng = _rng_for(seed, "case", index)
    case_id = f"syn-{seed:04x}-{index:06d}"
    complaint_type = rng.choice(COMPLAINT_TYPES)
    merchant = rng.choice(_MERCHANTS)
    product = rng.choice(_PRODUCTS)
    order = f"ord-{rng.randrange(10**8):08d}"
    created = _EPOCH + timedelta(days=rng.randrange(365), minutes=rng.randrange(1440))

    narrative = _NARRATIVES[complaint_type].format(product=product, merchant=merchant, order=order)

    assets = []
    for i in range(rng.randint(1, 4)):
        body = f"{case_id}/asset/{i}"
        assets.append(
            EvidenceAsset(
                asset_id=f"ast-{i}",
                medium=rng.choice(list(EvidenceMedium)),
                uri=f"assets/{hashlib.sha256(body.encode()).hexdigest()}",
                integrity_hash=hashlib.sha256(body.encode()).hexdigest(),
                extracted_text=f"Order {order} — {product} — amount due ¥{rng.randrange(20, 900)}.00",
                captured_at=created + timedelta(hours=i + 1),
            )
        )

    history = [
        InteractionRecord(created, Actor.USER, narrative.split(".")[0] + "."),
        InteractionRecord(created + timedelta(hours=2), Actor.AGENT, "Thanks for the report, we are checking the order records."),
    ]
    if rng.random() < 0.6:
        history.append(
            InteractionRecord(
                created + timedelta(hours=5),
                Actor.MERCHANT,
                rng.choice(
                    (
                        "We can offer a partial credit on this order.",
                        "Our records show the parcel left the warehouse on time.",
                        "Please send a photo of the damaged item.",
                    )
                ),
            )
        )

    clauses = [
        PolicyClause(*spec)
        for spec in rng.sample(_POLICY_LIBRARY, rng.randint(1, 3))
    ]

    metadata = {
        "complaint_type": complaint_type,
        "order_id": order,
        "created_at": created,
        "amount": Decimal(rng.randrange(2000, 90000)) / 100,
        "channel": rng.choice(("app", "web", "phone")),
        "product": product,
        "merchant": merchant,
    }
    return ComplaintCase(
        case_id=case_id,
        narrative=narrative,
        evidence_assets=assets,
        metadata=metadata,
        history=history,
        policy_clauses=clauses,
    )


def synthetic_cases(count: int, seed: int = 0) -> list[ComplaintCase]:
    return [synthetic_case(i, seed) for i in range(count)]


def decide_action(
    evidence_quality: str,
    responsibility: str,
    complaint_type: str,
    policy_applies: bool,
    has_policy: bool,
) -> str:
    """Deterministic action assignment consistent with the default rule set."""
    if evidence_quality == "insufficient":
        return DecisionAction.MANUAL_REVIEW.value
    if responsibility == "user":
        return DecisionAction.REJECT.value
    if not has_policy:
        if complaint_type in _SPECIALIST_TYPES:
            return DecisionAction.TRANSFER.value
        return DecisionAction.MANUAL_REVIEW.value
    if not policy_applies:
        return DecisionAction.REJECT.value
    if complaint_type in _SPECIALIST_TYPES:
        return DecisionAction.TRANSFER.value
    if complaint_type == "payment_dispute":
        return DecisionAction.COMPENSATE.value
    return DecisionAction.REFUND.value


def _order_status_for(stage: str, rng: random.Random) -> str:
    if stage == "pre_sale":
        return "created"
    if stage == "pre_delivery":
        return rng.choice(("paid", "shipped"))
    if stage == "post_delivery":
        return "delivered"
    return rng.choice(("delivered", "returned"))


def build_graph(
    case: ComplaintCase,
    *,
    graph_id: str | None = None,
    skip_policy_nodes: bool = False,
    variety_seed: int = 0,
) -> SceneKnowledgeGraph:
    """Deterministically derive a valid, rule-consistent scene graph.

    This is the offline stand-in for model-based graph construction:
    the demo pipeline, the scripted model client, and the fixture suite
    all build their graphs here.
    """
    rng = _rng_for(variety_seed, "graph", case.case_id)
    complaint_type = case.metadata.get("complaint_type")
    if not isinstance(complaint_type, str) or complaint_type not in COMPLAINT_TYPES:
        complaint_type = _infer_complaint_type(case)

    quality = rng.choices(EVIDENCE_QUALITIES, weights=(55, 25, 20))[0]
    if quality == "partial" and len(case.evidence_assets) < 2:
        quality = "sufficient"
    if not case.evidence_assets:
        quality = "insufficient"
    responsibility = rng.choice(RESPONSIBILITIES)
    stage = rng.choice(SERVICE_STAGES)
    merchant_response = rng.choice(MERCHANT_RESPONSES)
    policy_applies = rng.random() < 0.75
    has_policy = bool(case.policy_clauses) and not skip_policy_nodes
    action = decide_action(quality, responsibility, complaint_type, policy_applies, has_policy)

    dims = {
        "complaint_type": complaint_type,
        "evidence_quality": quality,
        "service_stage": stage,
        "responsibility": responsibility,
        "resolution_action": action,
    }

    nodes: list[SkgNode] = []
    edges: list[SkgEdge] = []
    edge_n = 0

    def add_edge(src, dst, relation):
        nonlocal edge_n
        edge_n += 1
        edges.append(SkgEdge(f"e-{edge_n:03d}", src, dst, relation))

    merchant = str(case.metadata.get("merchant", "the merchant"))
    nodes.append(SkgNode("ent-user", NodeKind.ENTITY, "complainant", {"party": "user"}))
    nodes.append(SkgNode("ent-merchant", NodeKind.ENTITY, merchant, {"party": "merchant"}))
    if responsibility not in ("user", "merchant"):
        nodes.append(
            SkgNode(
                f"ent-{responsibility}",
                NodeKind.ENTITY,
                f"{responsibility} desk",
                {"party": responsibility},
            )
        )
    product = str(case.metadata.get("product", "item"))
    nodes.append(
        SkgNode(
            "ent-product",
            NodeKind.ENTITY,
            product,
            {"stylistic_note": rng.choice(("as pictured", "gift wrapped", "bulk order"))},
        )
    )

    validities = _validity_mix(quality, len(case.evidence_assets))
    for asset, validity in zip(case.evidence_assets, validities):
        node_id = f"evd-{asset.asset_id}"
        nodes.append(
            SkgNode(
                node_id,
                NodeKind.EVIDENCE,
                asset.asset_id,
                {"validity": validity, "medium": asset.medium.value},
            )
        )
        if validity == "sufficient":
            add_edge(node_id, "dec-final", RelationType.SUPPORTS)
        elif validity == "contested":
            add_edge(node_id, "dec-final", RelationType.CONTRADICTS)
        if rng.random() < 0.3:
            add_edge(node_id, "ent-product", RelationType.REFERS_TO)

    stage_idx = service_stage_index(stage)
    event_ids = []
    for i, record in enumerate(case.history):
        node_id = f"evt-{i}"
        event_stage = SERVICE_STAGES[min(i, stage_idx)]
        nodes.append(
            SkgNode(
                node_id,
                NodeKind.EVENT,
                record.text[:60] or f"interaction {i}",
                {"timestamp": record.timestamp, "stage": event_stage, "actor": record.actor.value},
            )
        )
        if event_ids:
            add_edge(event_ids[-1], node_id, RelationType.PRECEDES)
        event_ids.append(node_id)

    state_attrs = {
        "complaint_type": complaint_type,
        "order_status": _order_status_for(stage, rng),
        "service_stage": stage,
        "responsibility": responsibility,
        "merchant_response": merchant_response,
    }
    nodes.append(SkgNode("st-order", NodeKind.STATE, f"order {case.metadata.get('order_id', '?')}", state_attrs))
    if event_ids:
        add_edge(event_ids[-1], "st-order", RelationType.RESULTS_IN)
        add_edge(event_ids[0], f"ent-{responsibility}", RelationType.ATTRIBUTED_TO)

    if has_policy:
        for i, clause in enumerate(case.policy_clauses):
            node_id = f"pol-{clause.clause_id}"
            nodes.append(
                SkgNode(
                    node_id,
                    NodeKind.POLICY,
                    clause.title or clause.clause_id,
                    {"applies": policy_applies, "clause_id": clause.clause_id},
                )
            )
            add_edge(node_id, "st-order", RelationType.APPLIES_TO)
            if i == 0:
                add_edge("dec-final", node_id, RelationType.REQUIRES)

    nodes.append(
        SkgNode("dec-final", NodeKind.DECISION, "recommended action", {"action": action, "final": True})
    )
    if rng.random() < 0.3:
        alternatives = [a.value for a in DecisionAction if a.value != action]
        nodes.append(
            SkgNode(
                "dec-alt",
                NodeKind.DECISION,
                "considered alternative",
                {"action": rng.choice(alternatives), "final": False},
            )
        )

    if len(case.history) > 2:
        add_edge("ent-merchant", "evt-2", RelationType.NEGOTIATED_IN)

    graph = SceneKnowledgeGraph(
        graph_id=graph_id or f"g-{case.case_id}",
        base_case_id=case.case_id,
        scene_dims=dims,
        nodes=tuple(nodes),
        edges=tuple(edges),
    )
    return with_recomputed_coupling(graph)


def _validity_mix(quality: str, count: int) -> list[str]:
    if quality == "sufficient":
        return ["sufficient"] * count
    if quality == "insufficient":
        return ["insufficient"] * count
    return ["sufficient"] + ["insufficient"] * (count - 1)


def _infer_complaint_type(case: ComplaintCase) -> str:
    rng = _rng_for(0, "ctype", case.case_id)
    lowered = case.narrative.lower()
    for ctype, marker in (
        ("logistics_delay", "late"),
        ("payment_dispute", "charged"),
        ("fraud_suspicion", "account"),
        ("billing_error", "invoice"),
        ("content_moderation", "listing"),
        ("after_sales", "repair"),
        ("product_quality", "damaged"),
    ):
        if marker in lowered:
            return ctype
    return rng.choice(COMPLAINT_TYPES)


def synthetic_graph(index: int, seed: int = 0, **knobs) -> SceneKnowledgeGraph:
    """Convenience: case plus graph in one call."""
    return build_graph(synthetic_case(index, seed), variety_seed=seed, **knobs)
