"""Policy constraint rules: DSL parsing, evaluation, and rule-consistent graph edits."""

from .ast import (
    And,
    ConstraintRule,
    ConstraintSet,
    DecisionIs,
    DimIs,
    EdgeExists,
    NodeAttrIs,
    Not,
    Or,
    Violation,
)
from .edits import (
    EditRequest,
    IdenticalVariant,
    InsufficientVariation,
    UnsatisfiableEdit,
    admissible_requests,
    closure,
    generalize,
    sample_edits,
)
from .evaluate import evaluate, is_consistent
from .parser import DuplicateRuleId, RuleSyntaxError, RuleTypeError, parse_rules, print_rules
from .presets import default_rules

__all__ = [
    "And",
    "ConstraintRule",
    "ConstraintSet",
    "DecisionIs",
    "DimIs",
    "DuplicateRuleId",
    "EdgeExists",
    "EditRequest",
    "IdenticalVariant",
    "InsufficientVariation",
    "NodeAttrIs",
    "Not",
    "Or",
    "RuleSyntaxError",
    "RuleTypeError",
    "UnsatisfiableEdit",
    "Violation",
    "admissible_requests",
    "closure",
    "default_rules",
    "evaluate",
    "generalize",
    "is_consistent",
    "parse_rules",
    "print_rules",
    "sample_edits",
]
