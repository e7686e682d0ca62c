"""Review task queue and audit trail.

Task lifecycle: pending -> claimed -> approved | rejected | edited.
Claims are exclusive and expire back to pending after a lease. An
annotator outcome of approved or edited auto-enqueues the senior stage;
a senior approval (or senior edit) finalizes the graph. Every state
transition is persisted as a new task record in the append-only store,
so the whole queue can be rebuilt by replaying the index.
"""

from __future__ import annotations

import hashlib
import threading
from dataclasses import dataclass, replace
from datetime import datetime, timedelta, timezone

from ..canonical import (
    canonical_bytes,
    canonical_text,
    canonicalize,
    edit_from_doc,
    edit_to_doc,
    graph_from_doc,
    loads_document,
    parse_graph,
)
from ..diff import apply_edit_log
from ..errors import NotFound, SkgError
from ..model import Provenance
from ..rules.ast import ConstraintSet
from ..rules.evaluate import evaluate, is_consistent
from ..validate import validate_graph
from .store import ContentStore

STAGES = ("annotator", "senior")
STATUSES = ("pending", "claimed", "approved", "rejected", "edited")
DEFAULT_LEASE_MINUTES = 60


class StageOrderViolation(SkgError):
    pass


class DuplicateTask(SkgError):
    pass


class WrongState(SkgError):
    pass


class WrongReviewer(SkgError):
    pass


class InvalidEdit(SkgError):
    def __init__(self, message: str, findings=()):
        super().__init__(message)
        self.findings = list(findings)


def _now() -> datetime:
    return datetime.now(timezone.utc).replace(microsecond=0)


def _render(ts: datetime | None) -> str:
    return ts.strftime("%Y-%m-%dT%H:%M:%SZ") if ts else ""


@dataclass(frozen=True)
class ReviewTask:
    task_id: str
    case_id: str
    graph_id: str
    stage: str
    status: str
    reviewer_id: str = ""
    decision_note: str = ""
    edit_log: tuple = ()
    derived_graph_id: str = ""
    created_at: str = ""
    claimed_at: str = ""
    decided_at: str = ""
    lease_expires_at: str = ""

    def to_doc(self) -> dict:
        return {
            "task_id": self.task_id,
            "case_id": self.case_id,
            "graph_id": self.graph_id,
            "stage": self.stage,
            "status": self.status,
            "reviewer_id": self.reviewer_id,
            "decision_note": self.decision_note,
            "edit_log": [edit_to_doc(op) for op in self.edit_log],
            "derived_graph_id": self.derived_graph_id,
            "created_at": self.created_at,
            "claimed_at": self.claimed_at,
            "decided_at": self.decided_at,
            "lease_expires_at": self.lease_expires_at,
        }

    @classmethod
    def from_doc(cls, doc) -> "ReviewTask":
        return cls(
            task_id=doc["task_id"],
            case_id=doc.get("case_id", ""),
            graph_id=doc["graph_id"],
            stage=doc["stage"],
            status=doc["status"],
            reviewer_id=doc.get("reviewer_id", ""),
            decision_note=doc.get("decision_note", ""),
            edit_log=tuple(edit_from_doc(d) for d in doc.get("edit_log", [])),
            derived_graph_id=doc.get("derived_graph_id", ""),
            created_at=doc.get("created_at", ""),
            claimed_at=doc.get("claimed_at", ""),
            decided_at=doc.get("decided_at", ""),
            lease_expires_at=doc.get("lease_expires_at", ""),
        )


class ReviewQueue:
    """Store-backed task queue; all mutations run under one writer lock."""

    def __init__(
        self,
        store: ContentStore,
        rules: ConstraintSet,
        lease_minutes: int = DEFAULT_LEASE_MINUTES,
        clock=_now,
    ):
        self.store = store
        self.rules = rules
        self.lease = timedelta(minutes=lease_minutes)
        self.clock = clock
        self._lock = threading.RLock()
        self._tasks: dict[str, ReviewTask] = {}
        self._replay()

    def _replay(self):
        for entry in self.store.entries(kind="task"):
            doc = loads_document(self.store.get(entry.key).payload)
            task = ReviewTask.from_doc(doc)
            self._tasks[task.task_id] = task

    def _persist(self, task: ReviewTask) -> ReviewTask:
        refs = [task.task_id, task.graph_id]
        if task.case_id:
            refs.append(task.case_id)
        if task.derived_graph_id:
            refs.append(task.derived_graph_id)
        self.store.put(canonical_bytes(task.to_doc()), "task", refs=refs)
        self._tasks[task.task_id] = task
        return task

    # -- graph helpers ----------------------------------------------------

    def put_graph(self, graph) -> str:
        return self.store.put(
            canonicalize(graph), "graph", refs=[graph.graph_id, graph.base_case_id]
        )

    def get_graph(self, graph_id: str):
        record = self.store.latest_by_ref("graph", graph_id)
        if record is None:
            raise NotFound(f"no graph {graph_id} in store")
        return parse_graph(record.payload)

    def _graph_exists(self, graph_id: str) -> bool:
        return self.store.latest_by_ref("graph", graph_id) is not None

    # -- lease handling ----------------------------------------------------

    def _reconcile_lease(self, task: ReviewTask) -> ReviewTask:
        if task.status != "claimed" or not task.lease_expires_at:
            return task
        expires = datetime.strptime(task.lease_expires_at, "%Y-%m-%dT%H:%M:%SZ").replace(
            tzinfo=timezone.utc
        )
        if self.clock() >= expires:
            return self._persist(
                replace(task, status="pending", reviewer_id="", claimed_at="", lease_expires_at="")
            )
        return task

    # -- queue operations ---------------------------------------------------

    def enqueue_task(self, case_id: str, graph_id: str, stage: str) -> ReviewTask:
        if stage not in STAGES:
            raise ValueError(f"stage must be one of {STAGES}")
        with self._lock:
            if not self._graph_exists(graph_id):
                raise NotFound(f"graph {graph_id} is not in the store")
            if stage == "senior":
                cleared = any(
                    t.stage == "annotator"
                    and t.status in ("approved", "edited")
                    and graph_id in (t.graph_id, t.derived_graph_id)
                    for t in self._tasks.values()
                )
                if not cleared:
                    raise StageOrderViolation(
                        f"graph {graph_id} has no approved or edited annotator task"
                    )
            for task in self._tasks.values():
                if (
                    task.graph_id == graph_id
                    and task.stage == stage
                    and self._reconcile_lease(task).status in ("pending", "claimed")
                ):
                    raise DuplicateTask(f"graph {graph_id} already has an open {stage} task")
            now = self.clock()
            seq = len(self._tasks)
            task_id = "t-" + hashlib.sha256(
                f"{graph_id}\x1f{stage}\x1f{seq}".encode()
            ).hexdigest()[:12]
            task = ReviewTask(
                task_id=task_id,
                case_id=case_id,
                graph_id=graph_id,
                stage=stage,
                status="pending",
                created_at=_render(now),
            )
            return self._persist(task)

    def claim_task(self, task_id: str, reviewer_id: str) -> ReviewTask:
        with self._lock:
            task = self._tasks.get(task_id)
            if task is None:
                raise NotFound(f"no task {task_id}")
            task = self._reconcile_lease(task)
            if task.status != "pending":
                raise WrongState(f"task {task_id} is {task.status}, not pending")
            now = self.clock()
            return self._persist(
                replace(
                    task,
                    status="claimed",
                    reviewer_id=reviewer_id,
                    claimed_at=_render(now),
                    lease_expires_at=_render(now + self.lease),
                )
            )

    def submit_decision(
        self,
        task_id: str,
        reviewer_id: str,
        decision: str,
        note: str = "",
        edit_log=(),
    ) -> ReviewTask:
        if decision not in ("approve", "reject", "edit"):
            raise ValueError("decision must be approve, reject, or edit")
        with self._lock:
            task = self._tasks.get(task_id)
            if task is None:
                raise NotFound(f"no task {task_id}")
            task = self._reconcile_lease(task)
            if task.status != "claimed":
                raise WrongState(f"task {task_id} is {task.status}, not claimed")
            if task.reviewer_id != reviewer_id:
                raise WrongReviewer(f"task {task_id} is claimed by {task.reviewer_id}")
            now = self.clock()

            if decision == "approve":
                done = self._persist(
                    replace(task, status="approved", decision_note=note, decided_at=_render(now))
                )
            elif decision == "reject":
                done = self._persist(
                    replace(task, status="rejected", decision_note=note, decided_at=_render(now))
                )
            else:
                if not edit_log:
                    raise InvalidEdit("edit decision needs a nonempty edit_log")
                derived = self._apply_edit(task, tuple(edit_log))
                done = self._persist(
                    replace(
                        task,
                        status="edited",
                        decision_note=note,
                        edit_log=tuple(edit_log),
                        derived_graph_id=derived.graph_id,
                        decided_at=_render(now),
                    )
                )

            if task.stage == "annotator" and done.status in ("approved", "edited"):
                next_graph = done.derived_graph_id or done.graph_id
                self.enqueue_task(done.case_id, next_graph, "senior")
            return done

    def _apply_edit(self, task: ReviewTask, edit_log):
        parent = self.get_graph(task.graph_id)
        try:
            edited = apply_edit_log(edit_log, parent)
        except SkgError as exc:
            raise InvalidEdit(f"edit log does not apply: {exc}") from exc
        derived_id = f"{parent.graph_id}.r" + hashlib.sha256(
            canonical_text([edit_to_doc(op) for op in edit_log]).encode()
        ).hexdigest()[:8]
        candidate = replace(
            edited,
            graph_id=derived_id,
            provenance=Provenance.generalized(parent.graph_id, edit_log),
        )
        result = validate_graph(candidate)
        if not result.ok:
            raise InvalidEdit(
                "edited graph fails validation: " + ", ".join(sorted(result.codes())),
                findings=result.violations,
            )
        if not is_consistent(candidate, self.rules):
            blocking = [v for v in evaluate(candidate, self.rules) if v.severity == "blocking"]
            raise InvalidEdit(
                "edited graph violates blocking rules: "
                + ", ".join(v.rule_id for v in blocking),
                findings=blocking,
            )
        self.put_graph(candidate)
        return candidate

    # -- views ---------------------------------------------------------------

    def tasks(self, stage: str | None = None, status: str | None = None) -> list[ReviewTask]:
        with self._lock:
            out = [self._reconcile_lease(t) for t in self._tasks.values()]
        if stage is not None:
            out = [t for t in out if t.stage == stage]
        if status is not None:
            out = [t for t in out if t.status == status]
        return sorted(out, key=lambda t: (t.created_at, t.task_id))

    def get_task(self, task_id: str) -> ReviewTask:
        with self._lock:
            task = self._tasks.get(task_id)
            if task is None:
                raise NotFound(f"no task {task_id}")
            return self._reconcile_lease(task)

    def list_finalized(self) -> list[str]:
        """Graph ids with an approved/edited senior task, re-checked at read time."""
        out = []
        for task in self.tasks(stage="senior"):
            if task.status == "approved":
                graph_id = task.graph_id
            elif task.status == "edited":
                graph_id = task.derived_graph_id
            else:
                continue
            try:
                graph = self.get_graph(graph_id)
            except NotFound:
                continue
            if validate_graph(graph).ok and is_consistent(graph, self.rules):
                out.append(graph_id)
        return sorted(set(out))

    def _lineage(self, graph_id: str) -> set[str]:
        """The graph plus its ancestors and descendants by provenance."""
        docs = {}
        for entry in self.store.entries(kind="graph"):
            doc = loads_document(self.store.get(entry.key).payload)
            docs[doc["graph_id"]] = doc
        lineage = {graph_id}
        # ancestors
        cursor = docs.get(graph_id)
        while cursor is not None:
            parent = cursor.get("provenance", {}).get("parent_graph_id", "")
            if not parent or parent in lineage:
                break
            lineage.add(parent)
            cursor = docs.get(parent)
        # descendants (fixed point over the parent relation)
        changed = True
        while changed:
            changed = False
            for gid, doc in docs.items():
                parent = doc.get("provenance", {}).get("parent_graph_id", "")
                if parent in lineage and gid not in lineage:
                    lineage.add(gid)
                    changed = True
        return lineage

    def audit_trail(self, graph_id: str) -> list[dict]:
        """Chronological store entries touching the graph or its lineage."""
        if not self._graph_exists(graph_id):
            raise NotFound(f"no graph {graph_id} in store")
        lineage = self._lineage(graph_id)
        trail = []
        for entry in self.store.entries():
            if lineage & set(entry.refs):
                trail.append(
                    {
                        "seq": entry.seq,
                        "key": entry.key,
                        "kind": entry.kind,
                        "written_at": entry.written_at,
                        "refs": list(entry.refs),
                    }
                )
        return trail
