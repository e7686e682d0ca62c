"""Seeded evidence corruption for robustness slices.

One shuffle per (case, seed) decides the removal order; a corruption
level removes the first round(level * n) assets of that order, so the
10% removal set is always a prefix of the 30% set and robustness curves
stay comparable across levels. Metadata fields that reference a removed
asset are blanked rather than deleted, keeping record shapes stable.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, replace
from decimal import ROUND_HALF_UP, Decimal

from ..model import ComplaintCase

TARGETS = ("evidence_assets", "metadata_fields", "both")

# Levels exercised by the published robustness protocol; other levels
# are allowed for ad-hoc sweeps.
PROTOCOL_LEVELS = (0.0, 0.10, 0.30)


@dataclass(frozen=True)
class CorruptionSpec:
    level: float
    seed: int = 0
    targets: str = "evidence_assets"

    def __post_init__(self):
        if not 0.0 <= self.level <= 1.0:
            raise ValueError("corruption level must be in [0, 1]")
        if self.targets not in TARGETS:
            raise ValueError(f"targets must be one of {TARGETS}")


def _rng(seed: int, case_id: str) -> random.Random:
    key = f"{seed}\x1f{case_id}"
    return random.Random(int.from_bytes(hashlib.sha256(key.encode()).digest()[:8], "big"))


def _round_half_up(level: float, count: int) -> int:
    return int((Decimal(str(level)) * count).quantize(Decimal("1"), rounding=ROUND_HALF_UP))


def removal_order(case: ComplaintCase, seed: int) -> list[str]:
    """The shuffled asset-id order corruption removes from (a pure function)."""
    ids = [a.asset_id for a in case.evidence_assets]
    _rng(seed, case.case_id).shuffle(ids)
    return ids


def corrupt_evidence(case: ComplaintCase, spec: CorruptionSpec) -> ComplaintCase:
    """Remove a level-sized prefix of the shuffled assets; level 0 is identity."""
    if spec.level == 0.0:
        return case

    removed_ids: set[str] = set()
    assets = case.evidence_assets
    if spec.targets in ("evidence_assets", "both") and assets:
        order = removal_order(case, spec.seed)
        k = _round_half_up(spec.level, len(assets))
        removed_ids = set(order[:k])
        assets = tuple(a for a in case.evidence_assets if a.asset_id not in removed_ids)

    removed_tokens = {
        t
        for a in case.evidence_assets
        if a.asset_id in removed_ids
        for t in (a.asset_id, a.integrity_hash)
        if t
    }
    metadata = dict(case.metadata)
    for key, value in case.metadata.items():
        if isinstance(value, str) and any(tok in value for tok in removed_tokens):
            metadata[key] = ""

    if spec.targets in ("metadata_fields", "both") and metadata:
        keys = sorted(metadata)
        _rng(spec.seed + 1, case.case_id).shuffle(keys)
        k = _round_half_up(spec.level, len(keys))
        for key in keys[:k]:
            metadata[key] = ""

    return replace(case, evidence_assets=assets, metadata=metadata)
