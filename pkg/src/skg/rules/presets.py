"""Bundled rule sets."""

from __future__ import annotations

from importlib import resources

from .ast import ConstraintSet
from .parser import parse_rules


def default_rules() -> ConstraintSet:
    """The rule set shipped with the package (complaint-handling defaults)."""
    source = resources.files("skg.rules").joinpath("default.skgr").read_text("utf-8")
    return parse_rules(source)
