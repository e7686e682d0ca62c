"""Report writers: one JSON document per run, optional CSV export."""

from __future__ import annotations

import csv
from pathlib import Path

from ..canonical import canonical_text
from ..model import SCHEMA_VERSION
from .runner import EvalReport


def report_doc(reports: dict[str, EvalReport]) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "slices": {name: report.to_doc() for name, report in sorted(reports.items())},
    }


def write_report(reports: dict[str, EvalReport], path) -> None:
    Path(path).write_text(canonical_text(report_doc(reports)) + "\n", encoding="utf-8")


def write_csv(reports: dict[str, EvalReport], path) -> None:
    """One row per (slice, metric); aggregates use a `avg:` prefix."""
    with Path(path).open("w", newline="", encoding="utf-8") as fp:
        writer = csv.writer(fp)
        writer.writerow(["slice", "metric", "score"])
        for name, report in sorted(reports.items()):
            for metric, score in sorted(report.per_subtask.items()):
                writer.writerow([name, metric, str(score)])
            for metric, score in sorted(report.aggregates.items()):
                writer.writerow([name, f"avg:{metric}", str(score)])
