"""HTTP API for the review workflow.

Static bearer tokens map to reviewer identities and roles; a reviewer
may only act on tasks whose stage matches their role. All error bodies
share the {error_code, message, details} shape with conventional status
codes (400 bad request, 401 unauthenticated, 403 forbidden, 404 absent,
409 state conflicts).
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

from fastapi import Depends, FastAPI, Header, Query, Request, Response
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from ..canonical import (
    canonical_text,
    case_to_doc,
    edit_from_doc,
    graph_to_doc,
    loads_document,
    parse_case,
)
from ..errors import NotFound, SchemaError, SkgError
from ..model import SCHEMA_VERSION
from ..rules.ast import ConstraintSet
from ..rules.evaluate import evaluate
from .store import ContentStore
from .tasks import (
    DuplicateTask,
    InvalidEdit,
    ReviewQueue,
    ReviewTask,
    StageOrderViolation,
    WrongReviewer,
    WrongState,
)

logger = logging.getLogger(__name__)


class ApiError(SkgError):
    def __init__(self, status: int, error_code: str, message: str, details=None):
        super().__init__(message)
        self.status = status
        self.error_code = error_code
        self.details = details or {}


def _error_response(exc: ApiError) -> JSONResponse:
    return JSONResponse(
        status_code=exc.status,
        content={
            "schema_version": SCHEMA_VERSION,
            "error_code": exc.error_code,
            "message": str(exc),
            "details": exc.details,
        },
    )


class ClaimBody(BaseModel):
    reviewer_id: str


class DecisionBody(BaseModel):
    reviewer_id: str
    decision: str
    note: str = ""
    edit_log: list[dict] | None = None


def load_tokens(path) -> dict[str, dict]:
    """Token file: {"<token>": {"reviewer_id": ..., "role": annotator|senior}}."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    for token, session in doc.items():
        if session.get("role") not in ("annotator", "senior"):
            raise SchemaError(f"token {token[:6]}... has an invalid role")
    return doc


def _task_doc(task: ReviewTask) -> dict:
    return task.to_doc()


def create_app(
    store: ContentStore,
    rules: ConstraintSet,
    tokens: dict[str, dict],
    *,
    lease_minutes: int = 60,
    queue: ReviewQueue | None = None,
) -> FastAPI:
    app = FastAPI(title="scene-graph review service", version="1")
    q = queue or ReviewQueue(store, rules, lease_minutes=lease_minutes)
    app.state.queue = q
    app.state.rules = rules

    def session(authorization: str = Header(default="")) -> dict:
        if not authorization.startswith("Bearer "):
            raise ApiError(401, "unauthenticated", "missing bearer token")
        token = authorization[len("Bearer ") :].strip()
        if token not in tokens:
            raise ApiError(401, "unauthenticated", "unknown token")
        return tokens[token]

    @app.exception_handler(ApiError)
    async def _handle_api_error(request: Request, exc: ApiError):
        return _error_response(exc)

    def _guard(task: ReviewTask, who: dict, body_reviewer: str):
        if who["role"] != task.stage:
            raise ApiError(
                403, "forbidden", f"role {who['role']} cannot act on {task.stage} tasks"
            )
        if body_reviewer != who["reviewer_id"]:
            raise ApiError(
                403, "forbidden", "reviewer_id does not match the authenticated session"
            )

    @app.get("/api/v1/tasks")
    def list_tasks(
        stage: str | None = Query(default=None),
        status: str | None = Query(default=None),
        who: dict = Depends(session),
    ):
        tasks = q.tasks(stage=stage, status=status)
        return {"schema_version": SCHEMA_VERSION, "tasks": [_task_doc(t) for t in tasks]}

    @app.post("/api/v1/tasks/{task_id}/claim")
    def claim(task_id: str, body: ClaimBody, who: dict = Depends(session)):
        try:
            task = q.get_task(task_id)
            _guard(task, who, body.reviewer_id)
            claimed = q.claim_task(task_id, body.reviewer_id)
        except NotFound as exc:
            raise ApiError(404, "not-found", str(exc)) from exc
        except WrongState as exc:
            raise ApiError(409, "wrong-state", str(exc)) from exc
        return {"schema_version": SCHEMA_VERSION, "task": _task_doc(claimed)}

    @app.post("/api/v1/tasks/{task_id}/decision")
    def decide(task_id: str, body: DecisionBody, who: dict = Depends(session)):
        if body.decision not in ("approve", "reject", "edit"):
            raise ApiError(400, "bad-request", f"unknown decision {body.decision!r}")
        try:
            task = q.get_task(task_id)
            _guard(task, who, body.reviewer_id)
            edit_log = ()
            if body.edit_log:
                edit_log = tuple(
                    edit_from_doc(d, f"edit_log[{i}]") for i, d in enumerate(body.edit_log)
                )
            decided = q.submit_decision(
                task_id, body.reviewer_id, body.decision, note=body.note, edit_log=edit_log
            )
        except NotFound as exc:
            raise ApiError(404, "not-found", str(exc)) from exc
        except WrongState as exc:
            raise ApiError(409, "wrong-state", str(exc)) from exc
        except WrongReviewer as exc:
            raise ApiError(403, "forbidden", str(exc)) from exc
        except InvalidEdit as exc:
            raise ApiError(
                400,
                "invalid-edit",
                str(exc),
                details={"findings": [getattr(f, "__dict__", str(f)) for f in exc.findings]},
            ) from exc
        except SchemaError as exc:
            raise ApiError(400, "bad-request", str(exc)) from exc
        return {"schema_version": SCHEMA_VERSION, "task": _task_doc(decided)}

    @app.get("/api/v1/cases/{case_id}")
    def get_case(case_id: str, who: dict = Depends(session)):
        record = store.latest_by_ref("case", case_id)
        if record is None:
            raise ApiError(404, "not-found", f"no case {case_id}")
        case = parse_case(record.payload)
        return {"schema_version": SCHEMA_VERSION, "case": case_to_doc(case)}

    @app.get("/api/v1/cases/{case_id}/assets/{digest}")
    def get_asset(case_id: str, digest: str, who: dict = Depends(session)):
        try:
            payload = store.get_asset(digest)
        except NotFound as exc:
            raise ApiError(404, "not-found", str(exc)) from exc
        return Response(content=payload, media_type="application/octet-stream")

    @app.get("/api/v1/graphs/{graph_id}")
    def get_graph(graph_id: str, who: dict = Depends(session)):
        try:
            graph = q.get_graph(graph_id)
        except NotFound as exc:
            raise ApiError(404, "not-found", str(exc)) from exc
        return {"schema_version": SCHEMA_VERSION, "graph": graph_to_doc(graph)}

    @app.get("/api/v1/graphs/{graph_id}/audit")
    def audit(graph_id: str, who: dict = Depends(session)):
        try:
            trail = q.audit_trail(graph_id)
        except NotFound as exc:
            raise ApiError(404, "not-found", str(exc)) from exc
        return {"schema_version": SCHEMA_VERSION, "graph_id": graph_id, "trail": trail}

    @app.get("/api/v1/graphs/{graph_id}/violations")
    def violations(
        graph_id: str,
        rules_id: str | None = Query(default=None, alias="rules"),
        who: dict = Depends(session),
    ):
        if rules_id is not None and rules_id != rules.ruleset_id:
            raise ApiError(404, "not-found", f"unknown ruleset {rules_id}")
        try:
            graph = q.get_graph(graph_id)
        except NotFound as exc:
            raise ApiError(404, "not-found", str(exc)) from exc
        found = evaluate(graph, rules)
        return {
            "schema_version": SCHEMA_VERSION,
            "graph_id": graph_id,
            "ruleset_id": rules.ruleset_id,
            "violations": [
                {
                    "rule_id": v.rule_id,
                    "severity": v.severity,
                    "message": v.message,
                    "node_ids": list(v.node_ids),
                    "edge_ids": list(v.edge_ids),
                }
                for v in found
            ],
        }

    @app.get("/api/v1/finalized")
    def finalized(who: dict = Depends(session)):
        return {"schema_version": SCHEMA_VERSION, "graph_ids": q.list_finalized()}

    return app
