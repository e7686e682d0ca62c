"""Deterministic stand-ins for the external model service.

make_bundle builds the bundle a well-behaved model would return for a
case, straight from the offline scene builder. DeterministicLlmClient
serves those bundles through the normal client surface and can inject
known defects for a configurable number of rounds, which is how the
loop's repair behavior is exercised without any network.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import timedelta

from ..corpus.describe import render_scene_description
from ..corpus.qa import sample_qa_items
from ..model import ComplaintCase, NodeKind
from ..synthetic import build_graph
from .bundle import GenerationBundle, bundle_payload_text
from .client import CompletionResult

DEFECTS = ("evidence-xref", "timeline")


def _inject_defect(graph, case, defect: str):
    nodes = list(graph.nodes)
    if defect == "evidence-xref":
        for i, node in enumerate(nodes):
            if node.kind == NodeKind.EVIDENCE:
                nodes[i] = replace(node, label="ghost-asset-000")
                break
        else:
            raise ValueError("graph has no evidence node to corrupt")
    elif defect == "timeline":
        created = case.metadata.get("created_at") or (
            case.history[0].timestamp if case.history else None
        )
        if created is None:
            raise ValueError("case has no reference timestamp")
        for i, node in enumerate(nodes):
            if node.kind == NodeKind.EVENT:
                nodes[i] = node.with_attr("timestamp", created - timedelta(days=1))
                break
        else:
            raise ValueError("graph has no event node to corrupt")
    else:
        raise ValueError(f"unknown defect {defect!r}")
    return replace(graph, nodes=tuple(nodes))


def make_bundle(
    case: ComplaintCase,
    *,
    iteration: int = 0,
    skip_graph: bool = False,
    skip_policy_nodes: bool = False,
    track_coverage: bool = True,
    variety_seed: int = 0,
    defect: str | None = None,
) -> GenerationBundle:
    """The bundle the deterministic generator produces for a case."""
    graph = build_graph(case, skip_policy_nodes=skip_policy_nodes, variety_seed=variety_seed)
    if defect is not None:
        graph = _inject_defect(graph, case, defect)
    description = render_scene_description(graph, track_coverage=track_coverage)
    qa = sample_qa_items(graph, seed=variety_seed)
    return GenerationBundle(
        iteration=iteration,
        graph=None if skip_graph else graph,
        description=description,
        qa=tuple(qa),
    )


def make_bundle_text(case: ComplaintCase, **kwargs) -> str:
    bundle = make_bundle(case, **kwargs)
    return "Scene model for the case follows.\n" + bundle_payload_text(bundle) + "\n"


@dataclass
class DeterministicLlmClient:
    """Per-case scripted model: defective for the first N rounds, then clean.

    Response k corresponds to the loop's k-th generation call (the
    initial generate, then each refine), so ``defect_rounds=1`` means
    the generator ships one flawed bundle and the first refinement
    fixes it; a large value means the model never repairs the defect.
    """

    case: ComplaintCase
    defect: str = "evidence-xref"
    defect_rounds: int = 0
    skip_graph: bool = False
    skip_policy_nodes: bool = False
    variety_seed: int = 0
    calls: int = field(default=0)

    def complete(self, messages, *, temperature=None, max_tokens=None) -> CompletionResult:
        round_no = self.calls
        self.calls += 1
        defect = self.defect if round_no < self.defect_rounds else None
        text = make_bundle_text(
            self.case,
            iteration=round_no,
            skip_graph=self.skip_graph,
            skip_policy_nodes=self.skip_policy_nodes,
            variety_seed=self.variety_seed,
            defect=defect,
        )
        return CompletionResult(text=text)
