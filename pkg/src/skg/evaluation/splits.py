"""Leakage-safe split assignment.

Membership is keyed on the base case id, never on the graph variant, so
every generalized graph lands in its source case's split. The bucket is
a stable 64-bit hash of seed and id reduced mod 10,000 against the
cumulative ratio thresholds; nothing about it depends on process state
or iteration order.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

SPLITS = ("train", "dev", "test")

_BUCKETS = 10_000


def _bucket(seed: int, base_case_id: str) -> int:
    payload = f"{seed}\x1f{base_case_id}".encode("utf-8")
    return int.from_bytes(hashlib.sha256(payload).digest()[:8], "big") % _BUCKETS


def assign_split(base_case_id: str, ratios: dict[str, float], seed: int) -> str:
    """Pure function (base_case_id, ratios, seed) -> train | dev | test."""
    total = sum(ratios.get(s, 0.0) for s in SPLITS)
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"split ratios must sum to 1, got {total}")
    bucket = _bucket(seed, base_case_id)
    train_edge = round(ratios.get("train", 0.0) * _BUCKETS)
    dev_edge = train_edge + round(ratios.get("dev", 0.0) * _BUCKETS)
    if bucket < train_edge:
        return "train"
    if bucket < dev_edge:
        return "dev"
    return "test"


@dataclass(frozen=True)
class SplitAssignment:
    """Bound ratios+seed, usable wherever a splitter callable is expected."""

    ratios: dict[str, float] = field(default_factory=lambda: {"train": 0.8, "dev": 0.1, "test": 0.1})
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "ratios", dict(self.ratios))
        assign_split("probe", self.ratios, self.seed)  # validates ratios eagerly

    def __call__(self, base_case_id: str) -> str:
        return assign_split(base_case_id, self.ratios, self.seed)
