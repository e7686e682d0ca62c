"""Decision metrics carried as exact rationals.

Scores live as Fractions from ingestion to aggregation and are rounded
half-up to two decimals only when a report is emitted, so published
table values can be checked to the exact rounding the tables use.
"""

from __future__ import annotations

from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from typing import Iterable, Sequence

from ..errors import EmptyInput, LengthMismatch, SkgError


class OutOfRange(SkgError):
    """A sub-score fell outside the 0-100 band."""


def _to_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Decimal)):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(str(value))
    if isinstance(value, str):
        return Fraction(Decimal(value))
    raise TypeError(f"not a score: {value!r}")


def round_score(value: Fraction, places: int = 2) -> Decimal:
    """Half-up rounding at emission time (table precision)."""
    numerator, denominator = value.numerator, value.denominator
    return (Decimal(numerator) / Decimal(denominator)).quantize(
        Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP
    )


def accuracy(preds: Sequence, golds: Sequence) -> Fraction:
    """Exact match rate over aligned predictions."""
    if len(preds) != len(golds):
        raise LengthMismatch(f"{len(preds)} predictions vs {len(golds)} golds")
    if not preds:
        raise EmptyInput("accuracy over zero records is undefined")
    hits = sum(1 for p, g in zip(preds, golds) if p == g)
    return Fraction(hits, len(preds))


def macro_f1(preds: Sequence, golds: Sequence, label_set: Iterable) -> Fraction:
    """Unweighted mean of per-label F1; a label with no support scores 0."""
    if len(preds) != len(golds):
        raise LengthMismatch(f"{len(preds)} predictions vs {len(golds)} golds")
    if not preds:
        raise EmptyInput("macro-F1 over zero records is undefined")
    labels = list(dict.fromkeys(label_set))
    if not labels:
        raise EmptyInput("macro-F1 needs a nonempty label set")
    total = Fraction(0)
    for label in labels:
        tp = sum(1 for p, g in zip(preds, golds) if p == label and g == label)
        fp = sum(1 for p, g in zip(preds, golds) if p == label and g != label)
        fn = sum(1 for p, g in zip(preds, golds) if p != label and g == label)
        denom = 2 * tp + fp + fn
        if denom:
            total += Fraction(2 * tp, denom)
    return total / len(labels)


def _mean_of_three(a, b, c) -> Fraction:
    scores = tuple(_to_fraction(s) for s in (a, b, c))
    for score in scores:
        if not 0 <= score <= 100:
            raise OutOfRange(f"score {float(score)} outside [0, 100]")
    return sum(scores, Fraction(0)) / 3


def avg_text(s_evidence, s_policy, s_action) -> Fraction:
    """Text-suite aggregate: mean of evidence, policy, and action scores."""
    return _mean_of_three(s_evidence, s_policy, s_action)


def avg_mm(s_routing, s_responsibility, s_resolution) -> Fraction:
    """Multimodal aggregate: mean of routing, responsibility, and resolution."""
    return _mean_of_three(s_routing, s_responsibility, s_resolution)
