"""Prompt templates for the three synthesis stages.

Placeholders use mustache-style ``{{name}}`` markers so template bodies
can contain literal JSON braces. Rendering is strict: a placeholder the
stage cannot supply raises MissingPlaceholder instead of leaking the
marker into the prompt.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources

from ..canonical import canonical_text
from ..errors import SkgError
from ..model import ComplaintCase
from ..values import encode_value

STAGES = ("generate", "verify", "refine")

_PLACEHOLDER_RE = re.compile(r"\{\{(\w+)\}\}")

PLACEHOLDERS = (
    "narrative",
    "evidence_texts",
    "metadata",
    "history",
    "policies",
    "prior_bundle",
    "findings",
)


class MissingPlaceholder(SkgError):
    def __init__(self, name: str, stage: str):
        super().__init__(f"placeholder {{{{{name}}}}} has no value in the {stage} stage")
        self.name = name


@dataclass(frozen=True)
class PromptTemplate:
    template_id: str
    stage: str
    body: str

    def __post_init__(self):
        if self.stage not in STAGES:
            raise ValueError(f"stage must be one of {STAGES}")
        if not self.body.strip():
            raise ValueError("template body must be nonempty")

    def placeholders(self) -> set[str]:
        return set(_PLACEHOLDER_RE.findall(self.body))


def _render_case_fields(case: ComplaintCase) -> dict[str, str]:
    evidence_lines = []
    for asset in case.evidence_assets:
        text = asset.extracted_text or "(no extracted text)"
        evidence_lines.append(f"[{asset.asset_id}] ({asset.medium.value}) {text}")
    metadata_lines = [f"case_id: {case.case_id}"]
    for key, value in case.metadata.items():
        metadata_lines.append(f"{key}: {canonical_text(encode_value(value))}")
    history_lines = [
        f"{encode_value(rec.timestamp)} {rec.actor.value}: {rec.text}" for rec in case.history
    ]
    policy_lines = [
        f"[{clause.clause_id}] {clause.title}: {clause.body}" for clause in case.policy_clauses
    ]
    return {
        "narrative": case.narrative,
        "evidence_texts": "\n".join(evidence_lines) or "(none)",
        "metadata": "\n".join(metadata_lines),
        "history": "\n".join(history_lines) or "(none)",
        "policies": "\n".join(policy_lines) or "(none)",
    }


def render_prompt(
    template: PromptTemplate,
    case: ComplaintCase,
    prior=None,
    report=None,
) -> str:
    """Substitute case fields (and loop context) into the template body.

    ``prior`` is the previous GenerationBundle, ``report`` the previous
    VerificationReport; both are required by refine-stage templates that
    reference them and rejected as markers otherwise.
    """
    values = _render_case_fields(case)
    if prior is not None:
        from .bundle import bundle_payload_text

        values["prior_bundle"] = bundle_payload_text(prior)
    if report is not None:
        lines = [
            f"- [{f.severity}] {f.check_id}: {f.message}" for f in report.findings
        ]
        values["findings"] = "\n".join(lines) or "(no findings)"

    def substitute(match):
        name = match.group(1)
        if name not in values:
            raise MissingPlaceholder(name, template.stage)
        return values[name]

    return _PLACEHOLDER_RE.sub(substitute, template.body)


def default_templates() -> dict[str, PromptTemplate]:
    """The templates shipped with the package, keyed by stage."""
    out = {}
    for stage in STAGES:
        body = resources.files("skg.synth").joinpath(f"templates/{stage}.txt").read_text("utf-8")
        out[stage] = PromptTemplate(template_id=f"builtin-{stage}", stage=stage, body=body)
    return out


def load_templates(directory) -> dict[str, PromptTemplate]:
    """Read <stage>.txt files from a directory, falling back to built-ins."""
    from pathlib import Path

    out = default_templates()
    base = Path(directory)
    for stage in STAGES:
        path = base / f"{stage}.txt"
        if path.exists():
            out[stage] = PromptTemplate(
                template_id=f"{path.stem}@{path.parent.name}", stage=stage, body=path.read_text("utf-8")
            )
    return out
