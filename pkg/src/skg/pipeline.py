"""End-to-end synthesis pipeline.

Drives the loop over a case batch, expands each final graph into
rule-consistent variants, and writes one emission record per graph
(case + graph + description + QA) ready for benchmark and corpus
builders. Ablation toggles degrade specific stages and nothing else:
the pipeline always runs to completion and every case ends as a final
emission or an escalation record.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

from .canonical import (
    canonical_text,
    case_from_doc,
    case_to_doc,
    description_from_doc,
    description_to_doc,
    graph_from_doc,
    graph_to_doc,
    qa_from_doc,
    qa_to_doc,
    read_lines,
)
from .corpus.bench import Emission
from .corpus.describe import render_scene_description
from .corpus.qa import sample_qa_items
from .model import SCHEMA_VERSION, ComplaintCase
from .rules import (
    ConstraintSet,
    EditRequest,
    IdenticalVariant,
    InsufficientVariation,
    UnsatisfiableEdit,
    admissible_requests,
    generalize,
    sample_edits,
)
from .rules.edits import DEFAULT_VARIANTS_PER_CASE
from .synth.loop import LoopConfig, LoopOutcome, TraceWriter, run_batch
from .synth.mock import DeterministicLlmClient

logger = logging.getLogger(__name__)

ABLATION_FLAGS = (
    "skip_verification",
    "skip_graph",
    "skip_policy_nodes",
    "skip_generalization",
    "skip_partition",
)


@dataclass(frozen=True)
class PipelineConfig:
    k_max: int = 3
    early_stop: bool = True
    workers: int = 4
    variants_per_case: int = DEFAULT_VARIANTS_PER_CASE
    seed: int = 0
    skip_verification: bool = False
    skip_graph: bool = False
    skip_policy_nodes: bool = False
    skip_generalization: bool = False
    skip_partition: bool = False

    @classmethod
    def with_ablations(cls, flags, **kwargs) -> "PipelineConfig":
        unknown = set(flags) - set(ABLATION_FLAGS)
        if unknown:
            raise ValueError(f"unknown ablation flags: {sorted(unknown)}")
        return cls(**{**{flag: True for flag in flags}, **kwargs})

    def loop_config(self) -> LoopConfig:
        return LoopConfig(
            k_max=self.k_max,
            early_stop=self.early_stop,
            skip_verification=self.skip_verification,
            skip_graph=self.skip_graph,
            skip_policy_nodes=self.skip_policy_nodes,
        )


@dataclass
class PipelineResult:
    emissions: list[Emission] = field(default_factory=list)
    outcomes: list[LoopOutcome] = field(default_factory=list)
    variant_failures: int = 0

    @property
    def finals(self) -> list[LoopOutcome]:
        return [o for o in self.outcomes if o.is_final]

    @property
    def escalations(self) -> list[LoopOutcome]:
        return [o for o in self.outcomes if not o.is_final]


def _variant_emissions(case, graph, rules, config) -> tuple[list[Emission], int]:
    try:
        requests = sample_edits(graph, rules, config.variants_per_case, seed=config.seed)
    except InsufficientVariation:
        # fewer admissible edits than the budget: take them all
        requests = [EditRequest(dim, value) for dim, value in admissible_requests(graph)]
    emissions = []
    failures = 0
    for request in requests:
        try:
            variant, _ = generalize(graph, rules, request)
        except (UnsatisfiableEdit, IdenticalVariant) as exc:
            logger.debug("variant %s=%s on %s failed: %s", request.dimension, request.value, graph.graph_id, exc)
            failures += 1
            continue
        description = render_scene_description(
            variant, track_coverage=not config.skip_partition
        )
        qa = sample_qa_items(variant, seed=request.rng_seed)
        emissions.append(
            Emission(case=case, graph=variant, description=description, qa=tuple(qa))
        )
    return emissions, failures


def mock_client_factory(config: PipelineConfig):
    def factory(case: ComplaintCase) -> DeterministicLlmClient:
        return DeterministicLlmClient(
            case,
            skip_graph=config.skip_graph,
            skip_policy_nodes=config.skip_policy_nodes,
            variety_seed=config.seed,
        )

    return factory


def run_pipeline(
    cases,
    rules: ConstraintSet,
    templates,
    client_for_case,
    config: PipelineConfig = PipelineConfig(),
    *,
    trace_writer: TraceWriter | None = None,
) -> PipelineResult:
    result = PipelineResult()
    result.outcomes = run_batch(
        cases,
        templates,
        rules,
        client_for_case,
        config.loop_config(),
        workers=config.workers,
        trace_writer=trace_writer,
    )
    by_id = {case.case_id: case for case in cases}
    for outcome in result.outcomes:
        if not outcome.is_final:
            continue
        case = by_id[outcome.case_id]
        bundle = outcome.bundle
        description = bundle.description
        if config.skip_partition and bundle.graph is not None:
            description = render_scene_description(bundle.graph, track_coverage=False)
        result.emissions.append(
            Emission(case=case, graph=bundle.graph, description=description, qa=bundle.qa)
        )
        if bundle.graph is not None and not config.skip_generalization:
            variants, failures = _variant_emissions(case, bundle.graph, rules, config)
            result.emissions.extend(variants)
            result.variant_failures += failures
    return result


# ---------------------------------------------------------------------------
# emission persistence


def emission_to_doc(emission: Emission) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "base_case_id": emission.base_case_id,
        "case": case_to_doc(emission.case),
        "description": description_to_doc(emission.description),
        "qa": [qa_to_doc(item) for item in emission.qa],
    }
    if emission.graph is not None:
        doc["graph"] = graph_to_doc(emission.graph)
    return doc


def emission_from_doc(doc) -> Emission:
    return Emission(
        case=case_from_doc(doc["case"]),
        graph=graph_from_doc(doc["graph"]) if "graph" in doc else None,
        description=description_from_doc(doc["description"]),
        qa=tuple(qa_from_doc(q) for q in doc.get("qa", [])),
    )


def write_emissions(emissions, path) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", encoding="utf-8") as fp:
        for emission in emissions:
            fp.write(canonical_text(emission_to_doc(emission)))
            fp.write("\n")
            count += 1
    return count


def read_emissions(path) -> list[Emission]:
    with Path(path).open(encoding="utf-8") as fp:
        return [emission_from_doc(doc) for doc in read_lines(fp)]


def write_escalations(outcomes, path) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", encoding="utf-8") as fp:
        for outcome in outcomes:
            if outcome.is_final:
                continue
            fp.write(
                canonical_text(
                    {
                        "schema_version": SCHEMA_VERSION,
                        "case_id": outcome.case_id,
                        "error": outcome.error,
                        "bundles": len(outcome.bundles),
                        "reports": len(outcome.reports),
                    }
                )
            )
            fp.write("\n")
            count += 1
    return count
