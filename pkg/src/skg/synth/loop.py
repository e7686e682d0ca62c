"""The generate -> verify -> refine loop.

One loop run handles one case: an initial generation, then up to
k_max verify passes with a refine call between consecutive failing
passes. A clean verify yields Final; exhausting the budget (or any
transport/parse failure after retries) yields Escalated with the full
trace. Cases are never dropped: every batch entry ends up in exactly
one of the two outcomes.
"""

from __future__ import annotations

import hashlib
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone

from ..errors import SkgError
from ..model import ComplaintCase
from ..rules.ast import ConstraintSet
from .bundle import BundleParseError, GenerationBundle, parse_bundle
from .client import AuthError, CompletionResult, TransportError
from .templates import PromptTemplate, render_prompt
from .verify import VerificationReport, run_verify

logger = logging.getLogger(__name__)


class ParseFailure(SkgError):
    """A model response could not be parsed into a bundle."""

    def __init__(self, cause: BundleParseError):
        super().__init__(str(cause))
        self.cause = cause


@dataclass(frozen=True)
class LoopConfig:
    k_max: int = 3
    early_stop: bool = True
    skip_verification: bool = False
    skip_graph: bool = False
    skip_policy_nodes: bool = False
    judge_blocking: bool = False

    def __post_init__(self):
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")


@dataclass(frozen=True)
class TraceRecord:
    case_id: str
    stage: str  # generate | verify | refine
    iteration: int
    prompt_digest: str
    raw_response: str
    parsed_ok: bool
    findings_count: int
    retries: int
    started_at: str
    finished_at: str

    def to_doc(self) -> dict:
        return {
            "case_id": self.case_id,
            "stage": self.stage,
            "iteration": self.iteration,
            "prompt_digest": self.prompt_digest,
            "raw_response": self.raw_response,
            "parsed_ok": self.parsed_ok,
            "findings_count": self.findings_count,
            "retries": self.retries,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
        }


@dataclass(frozen=True)
class LoopOutcome:
    status: str  # final | escalated
    case_id: str
    bundle: GenerationBundle | None
    bundles: tuple[GenerationBundle, ...]
    reports: tuple[VerificationReport, ...]
    trace: tuple[TraceRecord, ...]
    error: str = ""

    @property
    def is_final(self) -> bool:
        return self.status == "final"


def _now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class _Recorder:
    def __init__(self, case_id: str):
        self.case_id = case_id
        self.records: list[TraceRecord] = []

    def add(self, stage, iteration, prompt, raw, parsed_ok, findings_count=0, retries=0, started=None):
        self.records.append(
            TraceRecord(
                case_id=self.case_id,
                stage=stage,
                iteration=iteration,
                prompt_digest=_digest(prompt) if prompt else "",
                raw_response=raw,
                parsed_ok=parsed_ok,
                findings_count=findings_count,
                retries=retries,
                started_at=started or _now(),
                finished_at=_now(),
            )
        )


def _model_call(client, prompt: str, *, temperature=None) -> CompletionResult:
    return client.complete([{"role": "user", "content": prompt}], temperature=temperature)


def call_generate(
    case: ComplaintCase,
    template: PromptTemplate,
    client,
    *,
    allow_missing_graph: bool = False,
    recorder: _Recorder | None = None,
) -> GenerationBundle:
    """One generation round trip; the parsed bundle starts at iteration 0."""
    prompt = render_prompt(template, case)
    started = _now()
    result = _model_call(client, prompt)
    try:
        bundle = parse_bundle(result.text, 0, allow_missing_graph=allow_missing_graph)
    except BundleParseError as exc:
        if recorder:
            recorder.add("generate", 0, prompt, result.text, False, retries=result.retries, started=started)
        raise ParseFailure(exc) from exc
    if recorder:
        recorder.add("generate", 0, prompt, result.text, True, retries=result.retries, started=started)
    return bundle


def call_refine(
    case: ComplaintCase,
    bundle: GenerationBundle,
    report: VerificationReport,
    template: PromptTemplate,
    client,
    *,
    allow_missing_graph: bool = False,
    recorder: _Recorder | None = None,
) -> GenerationBundle:
    """One refinement round trip; iteration increases by one."""
    if not report.blocking:
        raise ValueError("refine requires at least one blocking finding")
    prompt = render_prompt(template, case, prior=bundle, report=report)
    started = _now()
    result = _model_call(client, prompt)
    next_iteration = bundle.iteration + 1
    try:
        refined = parse_bundle(result.text, next_iteration, allow_missing_graph=allow_missing_graph)
    except BundleParseError as exc:
        if recorder:
            recorder.add("refine", next_iteration, prompt, result.text, False, retries=result.retries, started=started)
        raise ParseFailure(exc) from exc
    if recorder:
        recorder.add("refine", next_iteration, prompt, result.text, True, retries=result.retries, started=started)
    return refined


def run_loop(
    case: ComplaintCase,
    templates: dict[str, PromptTemplate],
    rules: ConstraintSet,
    client,
    config: LoopConfig = LoopConfig(),
    *,
    judge=None,
) -> LoopOutcome:
    """Drive one case to Final or Escalated; never raises for model faults."""
    recorder = _Recorder(case.case_id)
    bundles: list[GenerationBundle] = []
    reports: list[VerificationReport] = []

    def escalated(error: str) -> LoopOutcome:
        return LoopOutcome(
            status="escalated",
            case_id=case.case_id,
            bundle=None,
            bundles=tuple(bundles),
            reports=tuple(reports),
            trace=tuple(recorder.records),
            error=error,
        )

    def final(bundle: GenerationBundle) -> LoopOutcome:
        return LoopOutcome(
            status="final",
            case_id=case.case_id,
            bundle=bundle,
            bundles=tuple(bundles),
            reports=tuple(reports),
            trace=tuple(recorder.records),
        )

    try:
        bundle = call_generate(
            case,
            templates["generate"],
            client,
            allow_missing_graph=config.skip_graph,
            recorder=recorder,
        )
    except (TransportError, AuthError, ParseFailure) as exc:
        logger.warning("case %s escalated at generate: %s", case.case_id, exc)
        return escalated(f"generate: {exc}")
    bundles.append(bundle)

    if config.skip_verification:
        return final(bundle)

    for k in range(config.k_max):
        try:
            report = run_verify(
                case,
                bundle,
                rules,
                judge=judge,
                judge_template=templates.get("verify"),
                judge_blocking=config.judge_blocking,
            )
        except (TransportError, AuthError) as exc:
            logger.warning("case %s escalated at verify %d: %s", case.case_id, k, exc)
            return escalated(f"verify[{k}]: {exc}")
        reports.append(replace(report, iteration=k))
        recorder.add(
            "verify", k, "", "", True, findings_count=len(report.findings)
        )
        if report.ok and (config.early_stop or k == config.k_max - 1):
            return final(bundle)
        if report.ok:
            continue
        if k == config.k_max - 1:
            break
        try:
            bundle = call_refine(
                case,
                bundle,
                report,
                templates["refine"],
                client,
                allow_missing_graph=config.skip_graph,
                recorder=recorder,
            )
        except (TransportError, AuthError, ParseFailure) as exc:
            logger.warning("case %s escalated at refine %d: %s", case.case_id, k, exc)
            return escalated(f"refine[{k}]: {exc}")
        bundles.append(bundle)
    return escalated(f"blocking findings remain after {config.k_max} verification rounds")


class TraceWriter:
    """Serialized appender for `.tracel` streams (one record per line)."""

    def __init__(self, fp):
        self._fp = fp
        self._lock = threading.Lock()

    def write(self, records) -> None:
        from ..canonical import canonical_text

        with self._lock:
            for record in records:
                self._fp.write(canonical_text(record.to_doc()))
                self._fp.write("\n")
            self._fp.flush()


def run_batch(
    cases,
    templates,
    rules: ConstraintSet,
    client_for_case,
    config: LoopConfig = LoopConfig(),
    *,
    workers: int = 4,
    judge=None,
    trace_writer: TraceWriter | None = None,
) -> list[LoopOutcome]:
    """Run loops for a batch under a bounded worker pool.

    ``client_for_case`` maps a case to the client the loop should use
    (a shared HTTP client, or a per-case scripted one). Unexpected
    exceptions escalate that case rather than killing the batch.
    """

    def one(case) -> LoopOutcome:
        try:
            outcome = run_loop(case, templates, rules, client_for_case(case), config, judge=judge)
        except Exception as exc:  # pragma: no cover - safety net, loop shouldn't raise
            logger.exception("case %s escalated by unexpected error", case.case_id)
            outcome = LoopOutcome(
                status="escalated",
                case_id=case.case_id,
                bundle=None,
                bundles=(),
                reports=(),
                trace=(),
                error=f"unexpected: {exc}",
            )
        if trace_writer is not None:
            trace_writer.write(outcome.trace)
        return outcome

    cases = list(cases)
    if workers <= 1:
        return [one(case) for case in cases]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, cases))
