"""Append-only persistence and the human verification workflow."""

from .store import ContentStore, DigestMismatch, StoreRecord
from .tasks import (
    DuplicateTask,
    InvalidEdit,
    ReviewQueue,
    ReviewTask,
    StageOrderViolation,
    WrongReviewer,
    WrongState,
)

__all__ = [
    "ContentStore",
    "DigestMismatch",
    "DuplicateTask",
    "InvalidEdit",
    "ReviewQueue",
    "ReviewTask",
    "StageOrderViolation",
    "StoreRecord",
    "WrongReviewer",
    "WrongState",
]
