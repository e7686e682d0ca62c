from __future__ import annotations

from datetime import datetime, timezone
from decimal import Decimal

import pytest

from skg.errors import SchemaError
from skg.values import (
    coerce_timestamp,
    decode_value,
    encode_value,
    is_timestamp_text,
    parse_timestamp,
    render_decimal,
    render_timestamp,
    value_from_text,
)


def test_timestamp_round_trip():
    ts = datetime(2024, 3, 1, 9, 30, 15, tzinfo=timezone.utc)
    assert render_timestamp(ts) == "2024-03-01T09:30:15Z"
    assert parse_timestamp("2024-03-01T09:30:15Z") == ts


def test_timestamp_truncates_to_seconds_and_converts_to_utc():
    from datetime import timedelta, timezone as tz

    eastern = tz(timedelta(hours=-5))
    ts = datetime(2024, 3, 1, 4, 30, 15, 999999, tzinfo=eastern)
    out = coerce_timestamp(ts)
    assert out.microsecond == 0
    assert render_timestamp(out) == "2024-03-01T09:30:15Z"


@pytest.mark.parametrize(
    "raw, rendered",
    [
        (Decimal("1.50"), "1.5"),
        (Decimal("0.10"), "0.1"),
        (Decimal("100"), "100"),
        (Decimal("100.00"), "100"),
        (Decimal("-0"), "0"),
        (Decimal("-3.200"), "-3.2"),
        (Decimal("0.000001"), "0.000001"),
    ],
)
def test_decimal_rendering_strips_trailing_zeros(raw, rendered):
    assert render_decimal(raw) == rendered


def test_non_finite_decimal_rejected():
    with pytest.raises(SchemaError):
        render_decimal(Decimal("NaN"))


def test_decode_infers_types():
    assert decode_value(True) is True
    assert decode_value(5) == 5
    assert decode_value(Decimal("1.5")) == Decimal("1.5")
    assert decode_value("2024-01-01T00:00:00Z") == datetime(2024, 1, 1, tzinfo=timezone.utc)
    assert decode_value("plain text") == "plain text"


def test_encode_decode_fixed_point():
    values = [True, 7, Decimal("19.90"), datetime(2024, 5, 1, tzinfo=timezone.utc), "x"]
    for value in values:
        assert decode_value(encode_value(value)) == value


def test_value_from_text():
    assert value_from_text("true") is True
    assert value_from_text("false") is False
    assert value_from_text("42") == 42
    assert value_from_text("-3.5") == Decimal("-3.5")
    assert value_from_text("2024-01-01T00:00:00Z") == datetime(2024, 1, 1, tzinfo=timezone.utc)
    assert value_from_text("sufficient") == "sufficient"


def test_is_timestamp_text_rejects_near_misses():
    assert is_timestamp_text("2024-01-01T00:00:00Z")
    assert not is_timestamp_text("2024-01-01T00:00:00")
    assert not is_timestamp_text("2024-01-01 00:00:00Z")
    assert not is_timestamp_text("2024-01-01T00:00:00+00:00")
