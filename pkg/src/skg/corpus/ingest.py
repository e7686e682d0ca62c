"""Complaint-export ingestion (CFPB-style CSV).

Rows without a narrative are skipped with a count rather than erroring:
real exports redact most narratives. Ingestion is idempotent because
case ids derive from the export's complaint id column.
"""

from __future__ import annotations

import csv
import logging
import re
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from ..errors import SkgError
from ..model import ComplaintCase

logger = logging.getLogger(__name__)

REQUIRED_COLUMNS = ("Complaint ID", "Consumer complaint narrative", "Product", "Issue")
_OPTIONAL_COLUMNS = ("Date received", "Company", "State", "Sub-product", "Sub-issue")

_DATE_RE = re.compile(r"^(\d{4})-(\d{2})-(\d{2})$|^(\d{2})/(\d{2})/(\d{4})$")


class MalformedCsv(SkgError):
    pass


class MissingColumns(SkgError):
    def __init__(self, columns):
        super().__init__(f"CSV lacks required columns: {', '.join(columns)}")
        self.columns = tuple(columns)


@dataclass(frozen=True)
class CfpbLabels:
    case_id: str
    product: str
    issue: str


def _parse_date(raw: str) -> datetime | None:
    match = _DATE_RE.match(raw.strip())
    if not match:
        return None
    if match.group(1):
        year, month, day = match.group(1), match.group(2), match.group(3)
    else:
        year, month, day = match.group(6), match.group(4), match.group(5)
    try:
        return datetime(int(year), int(month), int(day), tzinfo=timezone.utc)
    except ValueError:
        return None


def ingest_cfpb_csv(
    path, limit: int | None = None
) -> tuple[list[ComplaintCase], list[CfpbLabels], int]:
    """Read an export into cases plus classification labels.

    Returns (cases, labels, skipped) where skipped counts rows whose
    narrative was empty. Product and issue strings pass through
    byte-exact for the classification benchmarks.
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fp:
            reader = csv.DictReader(fp)
            if reader.fieldnames is None:
                raise MalformedCsv(f"{path} has no header row")
            missing = [c for c in REQUIRED_COLUMNS if c not in reader.fieldnames]
            if missing:
                raise MissingColumns(missing)
            cases: list[ComplaintCase] = []
            labels: list[CfpbLabels] = []
            skipped = 0
            for row in reader:
                if limit is not None and len(cases) >= limit:
                    break
                narrative = (row.get("Consumer complaint narrative") or "").strip()
                if not narrative:
                    skipped += 1
                    continue
                complaint_id = (row.get("Complaint ID") or "").strip()
                if not complaint_id:
                    skipped += 1
                    continue
                case_id = f"cfpb-{complaint_id}"
                metadata: dict = {"source": "cfpb"}
                for column in ("Product", "Issue", *[c for c in _OPTIONAL_COLUMNS if c != "Date received"]):
                    value = (row.get(column) or "").strip()
                    if value:
                        metadata[column.lower().replace(" ", "_").replace("-", "_")] = value
                received = _parse_date(row.get("Date received") or "")
                if received is not None:
                    metadata["created_at"] = received
                cases.append(
                    ComplaintCase(case_id=case_id, narrative=narrative, metadata=metadata)
                )
                labels.append(
                    CfpbLabels(
                        case_id=case_id,
                        product=(row.get("Product") or "").strip(),
                        issue=(row.get("Issue") or "").strip(),
                    )
                )
    except csv.Error as exc:
        raise MalformedCsv(f"{path}: {exc}") from exc
    if skipped:
        logger.info("ingest %s: kept %d cases, skipped %d without narratives", path, len(cases), skipped)
    return cases, labels, skipped
