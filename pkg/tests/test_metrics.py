from __future__ import annotations

import random
from decimal import Decimal
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from skg.errors import EmptyInput, LengthMismatch
from skg.evaluation.metrics import OutOfRange, accuracy, avg_mm, avg_text, macro_f1, round_score


def test_perfect_predictions():
    golds = ["A", "B", "A", "C"]
    assert accuracy(golds, golds) == 1
    assert macro_f1(golds, golds, ["A", "B", "C"]) == 1


def test_hand_confusion_matrix():
    golds = ["A", "A", "B", "B"]
    preds = ["A", "B", "B", "B"]
    # F1_A = 2*(1*0.5)/(1+0.5) = 2/3; F1_B = 2*(2/3*1)/(2/3+1) = 4/5
    score = macro_f1(preds, golds, ["A", "B"])
    assert score == (Fraction(2, 3) + Fraction(4, 5)) / 2
    assert round_score(score * 100) == Decimal("73.33")
    assert accuracy(preds, golds) == Fraction(3, 4)


def test_absent_label_contributes_zero():
    golds = ["A", "A"]
    preds = ["A", "A"]
    assert macro_f1(preds, golds, ["A", "B"]) == Fraction(1, 2)


def test_unparseable_predictions_count_as_wrong():
    golds = ["A", "B"]
    preds = [None, "B"]
    assert accuracy(preds, golds) == Fraction(1, 2)


def test_errors():
    with pytest.raises(LengthMismatch):
        accuracy(["A"], ["A", "B"])
    with pytest.raises(EmptyInput):
        accuracy([], [])
    with pytest.raises(LengthMismatch):
        macro_f1(["A"], ["A", "B"], ["A"])
    with pytest.raises(EmptyInput):
        macro_f1([], [], ["A"])
    with pytest.raises(EmptyInput):
        macro_f1(["A"], ["A"], [])


def test_avg_text_published_rows():
    assert round_score(avg_text("68.95", "65.74", "79.75")) == Decimal("71.48")
    assert round_score(avg_text("80.55", "76.92", "92.31")) == Decimal("83.26")


def test_avg_mm_published_rows():
    assert abs(avg_mm("74.31", "81.29", "86.03") - Fraction("80.54")) <= Fraction(5, 1000)
    assert abs(avg_mm("79.26", "86.03", "88.16") - Fraction("84.48")) <= Fraction(5, 1000)


def test_mean_of_equal_scores_is_identity():
    for value in ("0", "42.5", "100"):
        expected = Fraction(Decimal(value))
        assert avg_text(value, value, value) == expected
        assert avg_mm(value, value, value) == expected
    assert avg_mm(0, 0, 0) == 0


def test_out_of_range_rejected():
    with pytest.raises(OutOfRange):
        avg_text(101, 50, 50)
    with pytest.raises(OutOfRange):
        avg_mm(-1, 50, 50)


def test_round_score_half_up():
    assert round_score(Fraction("80.505")) == Decimal("80.51")
    assert round_score(Fraction("80.545")) == Decimal("80.55")
    assert round_score(Fraction("80.544")) == Decimal("80.54")


@given(st.lists(st.sampled_from(["A", "B", "C"]), min_size=1, max_size=60).flatmap(
    lambda golds: st.tuples(
        st.just(golds),
        st.lists(st.sampled_from(["A", "B", "C"]), min_size=len(golds), max_size=len(golds)),
    )
))
def test_macro_f1_permutation_invariant(pair):
    golds, preds = pair
    label_set = ["A", "B", "C"]
    base = macro_f1(preds, golds, label_set)
    rng = random.Random(11)
    order = list(range(len(golds)))
    rng.shuffle(order)
    shuffled = macro_f1([preds[i] for i in order], [golds[i] for i in order], label_set)
    assert shuffled == base
    assert macro_f1(preds, golds, list(reversed(label_set))) == base
