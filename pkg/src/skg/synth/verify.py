"""Hybrid bundle verification.

Deterministic checks are authoritative: structural validation,
constraint evaluation, evidence cross-referencing, and timeline order
never depend on a model. An optional judge client adds findings that
default to advisory severity; promoting them to blocking is a config
decision, not a code path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime

from ..model import ComplaintCase, NodeKind, RelationType
from ..rules.ast import ConstraintSet
from ..rules.evaluate import evaluate
from ..validate import validate_graph
from .bundle import GenerationBundle
from .templates import PromptTemplate, render_prompt

JUDGE_CHECK_ID = "llm-judge"


@dataclass(frozen=True)
class Finding:
    check_id: str
    severity: str  # blocking | advisory
    source: str  # structural | constraint | evidence_xref | llm_judge
    message: str
    node_ids: tuple[str, ...] = ()
    edge_ids: tuple[str, ...] = ()


@dataclass(frozen=True)
class VerificationReport:
    iteration: int
    findings: tuple[Finding, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "findings", tuple(self.findings))

    @property
    def blocking(self) -> tuple[Finding, ...]:
        return tuple(f for f in self.findings if f.severity == "blocking")

    @property
    def ok(self) -> bool:
        return not self.blocking


def _structural_findings(bundle: GenerationBundle) -> list[Finding]:
    result = validate_graph(bundle.graph)
    return [
        Finding(
            check_id=v.code,
            severity="blocking",
            source="structural",
            message=v.message,
            node_ids=v.node_ids,
            edge_ids=v.edge_ids,
        )
        for v in result.violations
    ]


def _constraint_findings(bundle: GenerationBundle, rules: ConstraintSet) -> list[Finding]:
    return [
        Finding(
            check_id=v.rule_id,
            severity=v.severity,
            source="constraint",
            message=v.message,
            node_ids=v.node_ids,
            edge_ids=v.edge_ids,
        )
        for v in evaluate(bundle.graph, rules)
    ]


def _evidence_xref_findings(case: ComplaintCase, bundle: GenerationBundle) -> list[Finding]:
    findings = []
    asset_ids = {a.asset_id for a in case.evidence_assets}
    texts = [a.extracted_text or "" for a in case.evidence_assets]
    for node in bundle.graph.nodes_of_kind(NodeKind.EVIDENCE):
        if node.label in asset_ids:
            continue
        if any(node.label in text for text in texts if text):
            continue
        findings.append(
            Finding(
                check_id="evidence-xref-missing",
                severity="blocking",
                source="evidence_xref",
                message=(
                    f"evidence node {node.node_id} labeled {node.label!r} matches no"
                    " asset id or extracted text in the case"
                ),
                node_ids=(node.node_id,),
            )
        )
    return findings


def _case_created_at(case: ComplaintCase) -> datetime | None:
    created = case.metadata.get("created_at")
    if isinstance(created, datetime):
        return created
    if case.history:
        return min(r.timestamp for r in case.history)
    return None


def _timeline_findings(case: ComplaintCase, bundle: GenerationBundle) -> list[Finding]:
    findings = []
    graph = bundle.graph
    created = _case_created_at(case)
    stamps: dict[str, datetime] = {}
    for node in graph.nodes_of_kind(NodeKind.EVENT):
        ts = node.attr("timestamp")
        if isinstance(ts, datetime):
            stamps[node.node_id] = ts
            if created is not None and ts < created:
                findings.append(
                    Finding(
                        check_id="timeline-order",
                        severity="blocking",
                        source="evidence_xref",
                        message=(
                            f"event {node.node_id} at {ts.isoformat()} precedes case"
                            f" creation {created.isoformat()}"
                        ),
                        node_ids=(node.node_id,),
                    )
                )
    for edge in graph.edges:
        if edge.relation != RelationType.PRECEDES:
            continue
        src_ts, dst_ts = stamps.get(edge.src), stamps.get(edge.dst)
        if src_ts is not None and dst_ts is not None and src_ts > dst_ts:
            findings.append(
                Finding(
                    check_id="timeline-precedes-order",
                    severity="blocking",
                    source="evidence_xref",
                    message=f"edge {edge.edge_id}: {edge.src} precedes {edge.dst} but is timestamped later",
                    edge_ids=(edge.edge_id,),
                )
            )
    return findings


def _judge_findings(case, bundle, judge, template, judge_blocking) -> list[Finding]:
    prompt = render_prompt(template, case, prior=bundle)
    result = judge.complete(
        [{"role": "user", "content": prompt}], temperature=0.0
    )
    findings = []
    for line in result.text.splitlines():
        line = line.strip()
        if line.upper().startswith("ISSUE:"):
            findings.append(
                Finding(
                    check_id=JUDGE_CHECK_ID,
                    severity="blocking" if judge_blocking else "advisory",
                    source="llm_judge",
                    message=line[6:].strip(),
                )
            )
    return findings


def run_verify(
    case: ComplaintCase,
    bundle: GenerationBundle,
    rules: ConstraintSet,
    *,
    judge=None,
    judge_template: PromptTemplate | None = None,
    judge_blocking: bool = False,
    skip_judge: bool = False,
) -> VerificationReport:
    """Union of deterministic findings plus optional judge findings.

    Graph-dependent checks are skipped for graphless (ablated) bundles.
    Only the judge portion can raise TransportError; deterministic
    checks are total.
    """
    findings: list[Finding] = []
    if bundle.graph is not None:
        findings.extend(_structural_findings(bundle))
        findings.extend(_constraint_findings(bundle, rules))
        findings.extend(_evidence_xref_findings(case, bundle))
        findings.extend(_timeline_findings(case, bundle))
    if judge is not None and judge_template is not None and not skip_judge:
        findings.extend(_judge_findings(case, bundle, judge, judge_template, judge_blocking))
    return VerificationReport(iteration=bundle.iteration, findings=tuple(findings))
