"""Deterministic splits, decision metrics, and benchmark execution."""

from .consistency import GraphNotFound, MissingAction, Prediction, policy_consistency
from .metrics import (
    OutOfRange,
    accuracy,
    avg_mm,
    avg_text,
    macro_f1,
    round_score,
)
from .runner import (
    EvalReport,
    ReplayClient,
    ReplayMismatch,
    rare_type_filter,
    render_eval_prompt,
    run_eval,
)
from .splits import SplitAssignment, assign_split

__all__ = [
    "EvalReport",
    "GraphNotFound",
    "MissingAction",
    "OutOfRange",
    "Prediction",
    "ReplayClient",
    "ReplayMismatch",
    "SplitAssignment",
    "accuracy",
    "assign_split",
    "avg_mm",
    "avg_text",
    "macro_f1",
    "policy_consistency",
    "rare_type_filter",
    "render_eval_prompt",
    "round_score",
    "run_eval",
]
