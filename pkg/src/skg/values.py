"""Typed attribute values and their canonical text forms.

Attribute maps on cases, nodes, and edges hold values of exactly five
types: str, int, Decimal, UTC datetime (second precision), and bool.
The canonical encoding is plain JSON: booleans and integers map to JSON
literals, decimals to JSON numbers with trailing zeros stripped,
timestamps to RFC 3339 ``YYYY-MM-DDTHH:MM:SSZ`` strings. Decoding
inverts that mapping, so a JSON string in timestamp shape comes back as
a datetime and a fractional number comes back as a Decimal; the
encoding is a fixed point under decode-then-encode, which is what
canonical byte equality relies on.
"""

from __future__ import annotations

import re
from datetime import datetime, timezone
from decimal import Decimal, InvalidOperation

from .errors import SchemaError

TypedValue = str | int | Decimal | datetime | bool

_TIMESTAMP_RE = re.compile(r"^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}Z$")


def coerce_timestamp(value: datetime) -> datetime:
    """Normalize a datetime to UTC second precision."""
    if value.tzinfo is None:
        value = value.replace(tzinfo=timezone.utc)
    return value.astimezone(timezone.utc).replace(microsecond=0)


def render_timestamp(value: datetime) -> str:
    return coerce_timestamp(value).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_timestamp(text: str, path: str = "") -> datetime:
    if not _TIMESTAMP_RE.match(text):
        raise SchemaError(f"not an RFC 3339 UTC timestamp: {text!r}", path=path)
    return datetime.strptime(text, "%Y-%m-%dT%H:%M:%SZ").replace(tzinfo=timezone.utc)


def is_timestamp_text(text: str) -> bool:
    return bool(_TIMESTAMP_RE.match(text))


def render_decimal(value: Decimal) -> str:
    """Render without trailing zeros or exponent notation."""
    if not value.is_finite():
        raise SchemaError(f"non-finite decimal not representable: {value}")
    text = format(value.normalize(), "f")
    if text == "-0":
        text = "0"
    return text


def coerce_value(value: object, path: str = "") -> TypedValue:
    """Accept a python value as a TypedValue, normalizing where needed."""
    if isinstance(value, bool):
        return value
    if isinstance(value, int):
        return value
    if isinstance(value, Decimal):
        if not value.is_finite():
            raise SchemaError(f"non-finite decimal: {value}", path=path)
        return value
    if isinstance(value, float):
        # floats are accepted at the boundary but stored as decimals
        return Decimal(repr(value))
    if isinstance(value, datetime):
        return coerce_timestamp(value)
    if isinstance(value, str):
        return value
    raise SchemaError(f"unsupported attribute value type {type(value).__name__}", path=path)


def decode_value(raw: object, path: str = "") -> TypedValue:
    """Decode a JSON-level value into a TypedValue."""
    if isinstance(raw, bool):
        return raw
    if isinstance(raw, int):
        return raw
    if isinstance(raw, Decimal):
        return raw
    if isinstance(raw, float):
        return Decimal(repr(raw))
    if isinstance(raw, str):
        if is_timestamp_text(raw):
            return parse_timestamp(raw, path=path)
        return raw
    raise SchemaError(f"unsupported value {raw!r}", path=path)


def encode_value(value: TypedValue) -> object:
    """Encode a TypedValue into its JSON-level form."""
    if isinstance(value, bool):
        return value
    if isinstance(value, int):
        return value
    if isinstance(value, Decimal):
        return value
    if isinstance(value, datetime):
        return render_timestamp(value)
    if isinstance(value, str):
        return value
    raise SchemaError(f"unsupported attribute value type {type(value).__name__}")


def value_from_text(text: str) -> TypedValue:
    """Best-effort typed read of a bare token (used by the rule DSL)."""
    if text == "true":
        return True
    if text == "false":
        return False
    if is_timestamp_text(text):
        return parse_timestamp(text)
    if re.fullmatch(r"-?\d+", text):
        return int(text)
    try:
        if re.fullmatch(r"-?\d+\.\d+", text):
            return Decimal(text)
    except InvalidOperation:  # pragma: no cover - regex guards this
        pass
    return text
