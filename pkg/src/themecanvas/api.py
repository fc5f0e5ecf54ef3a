"""HTTP service boundary: every workspace operation, plus async-style AI jobs.

The :class:`Engine` owns the workspaces, the provider client, and the job
table; the FastAPI app built by :func:`create_app` is a thin dispatch layer
over it. Mutations per workspace funnel through one lock (optimistic
concurrency via an optional ``expected_revision``), reads serve snapshots,
and every state change happens through a logged engine operation. AI work
(placement, naming, describing, summarizing) runs as jobs polled by ticket;
results enter the workspace only through logged mutations.

Error bodies are ``{code, message, details?}`` with stable machine-readable
codes passed through from the engine.
"""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response

from . import store, suggest, summarize
from .errors import EngineError
from .evaluation import load_labeling, run_classification, score_accuracy
from .graph import (
    DEFAULT_THRESHOLDS,
    DetailTier,
    Workspace,
    ZoomThresholds,
    invert_delta,
    tier_for_zoom,
)
from .provider import MODE_LIVE, MODE_MOCK, ProviderClient, ProviderConfig
from .summarize import DEFAULT_BUDGETS, SummaryBudgets

JOB_KINDS = ("placement", "name", "describe", "summarize")

QUEUED = "queued"
RUNNING = "running"
DONE = "done"
FAILED = "failed"


@dataclass
class JobTicket:
    job_id: str
    workspace_id: str
    kind: str
    state: str = QUEUED
    result: dict[str, Any] | None = None
    error: dict[str, Any] | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "job_id": self.job_id,
            "workspace_id": self.workspace_id,
            "kind": self.kind,
            "state": self.state,
            "result": self.result,
            "error": self.error,
        }


@dataclass
class MutationResult:
    revision: int
    delta: list[dict[str, Any]] = field(default_factory=list)


class Engine:
    """All workspaces plus the provider and job plumbing behind the service."""

    def __init__(
        self,
        provider_config: ProviderConfig | None = None,
        data_dir: str | Path | None = None,
        clock: Callable[[], float] | None = None,
        thresholds: ZoomThresholds = DEFAULT_THRESHOLDS,
        budgets: SummaryBudgets = DEFAULT_BUDGETS,
    ) -> None:
        self.provider = ProviderClient(provider_config)
        self.data_dir = Path(data_dir) if data_dir else None
        self.clock = clock
        self.thresholds = thresholds
        self.budgets = budgets
        self.workspaces: dict[str, Workspace] = {}
        self.jobs: dict[str, JobTicket] = {}
        self._locks: dict[str, threading.RLock] = {}
        self._ws_counter = 0
        self._job_counter = 0
        self._registry_lock = threading.Lock()
        if self.data_dir is not None:
            self._load_existing()

    # -- workspace registry ----------------------------------------------------

    def _load_existing(self) -> None:
        self.data_dir.mkdir(parents=True, exist_ok=True)
        for path in sorted(self.data_dir.glob("*.json")):
            workspace = store.load_workspace(path, clock=self.clock)
            self.workspaces[workspace.workspace_id] = workspace
            self._locks[workspace.workspace_id] = threading.RLock()

    def create_workspace(self) -> Workspace:
        with self._registry_lock:
            while True:
                self._ws_counter += 1
                workspace_id = f"w{self._ws_counter}"
                if workspace_id not in self.workspaces:
                    break
            workspace = Workspace(workspace_id, clock=self.clock)
            self.workspaces[workspace_id] = workspace
            self._locks[workspace_id] = threading.RLock()
        self._persist(workspace)
        return workspace

    def get_workspace(self, workspace_id: str) -> Workspace:
        workspace = self.workspaces.get(workspace_id)
        if workspace is None:
            raise EngineError("workspace_missing", f"no workspace {workspace_id!r}")
        return workspace

    def find_document_workspace(self, doc_id: str) -> Workspace:
        for workspace_id in sorted(self.workspaces):
            if doc_id in self.workspaces[workspace_id].corpus:
                return self.workspaces[workspace_id]
        raise EngineError("unknown_document", f"no document {doc_id!r}")

    def find_suggestion_workspace(self, suggestion_id: str) -> Workspace:
        workspace_id = suggestion_id.split(".", 1)[0]
        workspace = self.workspaces.get(workspace_id)
        if workspace is not None and suggestion_id in workspace.suggestions:
            return workspace
        # Loaded workspaces may carry ids that defeat the prefix convention.
        for key in sorted(self.workspaces):
            if suggestion_id in self.workspaces[key].suggestions:
                return self.workspaces[key]
        raise EngineError("unknown_suggestion", f"no suggestion {suggestion_id!r}")

    def _persist(self, workspace: Workspace) -> None:
        if self.data_dir is not None:
            store.save_workspace(workspace, self.data_dir / f"{workspace.workspace_id}.json")

    # -- mutation funnel ---------------------------------------------------------

    def mutate(
        self,
        workspace_id: str,
        fn: Callable[[Workspace], Any],
        expected_revision: int | None = None,
    ) -> tuple[Any, MutationResult]:
        """Run one engine op under the workspace lock; returns (value, result)."""
        workspace = self.get_workspace(workspace_id)
        with self._locks[workspace_id]:
            if expected_revision is not None and expected_revision != workspace.revision:
                raise EngineError(
                    "revision_conflict",
                    f"expected revision {expected_revision}, at {workspace.revision}",
                    current_revision=workspace.revision,
                )
            before = workspace.revision
            try:
                value = fn(workspace)
            finally:
                # Persist whenever state changed, including when the op raised
                # after recording a mutation (preview/resolve mark a
                # suggestion stale and then fail with suggestion_stale).
                if workspace.revision != before:
                    self._persist(workspace)
            delta: list[dict[str, Any]] = []
            if workspace.revision > before and workspace.events:
                delta = invert_delta(workspace.events[-1].inverse)
            return value, MutationResult(revision=workspace.revision, delta=delta)

    # -- jobs ---------------------------------------------------------------------

    def enqueue_job(
        self, workspace_id: str, kind: str, params: dict[str, Any]
    ) -> JobTicket:
        """Validate params, queue a ticket, and run the job against the workspace."""
        workspace = self.get_workspace(workspace_id)
        if kind not in JOB_KINDS:
            raise EngineError("validation_error", f"unknown job kind {kind!r}")
        self._validate_job_params(workspace, kind, params)
        with self._registry_lock:
            self._job_counter += 1
            ticket = JobTicket(
                job_id=f"j{self._job_counter}", workspace_id=workspace_id, kind=kind
            )
            self.jobs[ticket.job_id] = ticket
        self._run_job(ticket, params)
        return ticket

    def _validate_job_params(
        self, workspace: Workspace, kind: str, params: dict[str, Any]
    ) -> None:
        if kind == "placement":
            evidence = workspace.get_evidence(_param(params, "evidence_id"))
            if workspace.evidence_memberships(evidence.node_id):
                raise EngineError(
                    "validation_error",
                    f"already_assigned: {evidence.node_id} is already in a theme",
                    reason="already_assigned",
                )
        elif kind in ("name", "describe"):
            theme = workspace.get_theme(_param(params, "theme_id"))
            if not workspace.member_ids(theme.node_id):
                raise EngineError(
                    "validation_error",
                    f"no_evidence: theme {theme.node_id} has no members",
                    reason="no_evidence",
                )
        elif kind == "summarize":
            workspace.get_evidence(_param(params, "node_id"))

    def _run_job(self, ticket: JobTicket, params: dict[str, Any]) -> None:
        ticket.state = RUNNING
        try:
            if ticket.kind == "placement":
                suggestion, _ = self.mutate(
                    ticket.workspace_id,
                    lambda ws: suggest.suggest_placement(
                        ws, params["evidence_id"], self.provider
                    ),
                )
                ticket.result = {"suggestion_id": suggestion.suggestion_id}
            elif ticket.kind == "name":
                suggestion, _ = self.mutate(
                    ticket.workspace_id,
                    lambda ws: suggest.suggest_theme_name(
                        ws, params["theme_id"], self.provider
                    ),
                )
                ticket.result = {"suggestion_id": suggestion.suggestion_id}
            elif ticket.kind == "describe":
                suggestion, _ = self.mutate(
                    ticket.workspace_id,
                    lambda ws: suggest.describe_theme(
                        ws, params["theme_id"], self.provider
                    ),
                )
                ticket.result = {"suggestion_id": suggestion.suggestion_id}
            else:
                tiers, _ = self.mutate(
                    ticket.workspace_id,
                    lambda ws: summarize.summarize_node(
                        ws, params["node_id"], self.provider, self.budgets
                    ),
                )
                ticket.result = {"summaries": tiers.to_dict()}
        except EngineError as exc:
            ticket.state = FAILED
            ticket.error = exc.to_dict()
            return
        ticket.state = DONE

    def poll_job(self, job_id: str) -> JobTicket:
        ticket = self.jobs.get(job_id)
        if ticket is None:
            raise EngineError("unknown_job", f"no job {job_id!r}")
        return ticket


def _param(params: dict[str, Any], name: str) -> Any:
    if not isinstance(params, dict) or name not in params:
        raise EngineError("validation_error", f"params missing field {name!r}")
    return params[name]


# ---------------------------------------------------------------------------
# FastAPI app
# ---------------------------------------------------------------------------

_STATUS_BY_CODE = {
    "workspace_missing": 404,
    "unknown_document": 404,
    "unknown_node": 404,
    "unknown_suggestion": 404,
    "unknown_job": 404,
    "revision_conflict": 409,
    "suggestion_stale": 409,
    "provider_unreachable": 502,
    "provider_invalid": 502,
    "schema_violation_exhausted": 502,
    "timeout": 504,
    "io_failure": 500,
    "integrity_violation": 500,
}


def _require(body: dict[str, Any], *fields: str) -> None:
    if not isinstance(body, dict):
        raise EngineError("validation_error", "body must be a JSON object")
    for name in fields:
        if name not in body:
            raise EngineError("validation_error", f"body missing field {name!r}")


def engine_from_env() -> Engine:
    mode = os.environ.get("THEMECANVAS_PROVIDER_MODE", MODE_MOCK)
    config = ProviderConfig(
        mode=MODE_LIVE if mode == MODE_LIVE else MODE_MOCK,
        endpoint=os.environ.get("THEMECANVAS_PROVIDER_ENDPOINT", ""),
    )
    data_dir = os.environ.get("THEMECANVAS_DATA_DIR") or None
    return Engine(provider_config=config, data_dir=data_dir)


def create_app(engine: Engine | None = None) -> FastAPI:
    engine = engine or engine_from_env()
    app = FastAPI(title="themecanvas", version="0.1.0")
    app.state.engine = engine

    @app.exception_handler(EngineError)
    async def engine_error_handler(request: Request, exc: EngineError) -> JSONResponse:
        status = _STATUS_BY_CODE.get(exc.code, 422)
        return JSONResponse(status_code=status, content=exc.to_dict())

    @app.exception_handler(RequestValidationError)
    async def validation_handler(
        request: Request, exc: RequestValidationError
    ) -> JSONResponse:
        fields = ", ".join(
            ".".join(str(part) for part in error.get("loc", [])) for error in exc.errors()
        )
        return JSONResponse(
            status_code=400,
            content={"code": "validation_error", "message": f"invalid request: {fields}"},
        )

    # -- configuration ----------------------------------------------------------

    @app.get("/config")
    def get_config() -> dict[str, Any]:
        return {
            "zoom_thresholds": engine.thresholds.to_dict(),
            "summary_budgets": engine.budgets.to_dict(),
            "tier_order": [tier.name for tier in sorted(DetailTier, reverse=True)],
        }

    @app.get("/config/tier")
    def get_tier(zoom: float, node_kind: str = "evidence") -> dict[str, Any]:
        tier = tier_for_zoom(zoom, node_kind, engine.thresholds)
        return {"zoom": zoom, "node_kind": node_kind, "tier": tier.name}

    # -- workspaces ---------------------------------------------------------------

    @app.post("/workspaces", status_code=201)
    def create_workspace() -> dict[str, Any]:
        workspace = engine.create_workspace()
        return {"workspace_id": workspace.workspace_id, "revision": workspace.revision}

    @app.get("/workspaces")
    def list_workspaces() -> dict[str, Any]:
        return {
            "workspaces": [
                {"workspace_id": ws.workspace_id, "revision": ws.revision}
                for _, ws in sorted(engine.workspaces.items())
            ]
        }

    @app.get("/workspaces/{workspace_id}")
    def get_workspace(workspace_id: str) -> dict[str, Any]:
        workspace = engine.get_workspace(workspace_id)
        return {
            "workspace_id": workspace.workspace_id,
            "revision": workspace.revision,
            "documents": [
                workspace.corpus.get(doc_id).to_dict()
                for doc_id in workspace.corpus.doc_ids()
            ],
            "nodes": [workspace.nodes[k].to_dict() for k in sorted(workspace.nodes)],
            "edges": [workspace.edges[k].to_dict() for k in sorted(workspace.edges)],
            "suggestions": [
                workspace.suggestions[k].to_dict() for k in sorted(workspace.suggestions)
            ],
        }

    # -- documents and snippets -----------------------------------------------------

    @app.post("/workspaces/{workspace_id}/documents", status_code=201)
    def ingest_document(workspace_id: str, body: dict[str, Any]) -> dict[str, Any]:
        _require(body, "pages")
        doc_id, result = engine.mutate(
            workspace_id,
            lambda ws: ws.ingest_document(body),
            body.get("expected_revision"),
        )
        return {"doc_id": doc_id, "revision": result.revision}

    @app.post("/documents/{doc_id}/snippets")
    def extract_snippet(doc_id: str, body: dict[str, Any]) -> dict[str, Any]:
        _require(body, "page_no", "char_start", "char_end")
        workspace = engine.find_document_workspace(doc_id)
        anchor = workspace.corpus.extract_snippet(
            doc_id, int(body["page_no"]), int(body["char_start"]), int(body["char_end"])
        )
        return {"anchor": anchor.to_dict()}

    # -- nodes and edges ---------------------------------------------------------------

    @app.post("/workspaces/{workspace_id}/nodes", status_code=201)
    def create_node(workspace_id: str, body: dict[str, Any]) -> dict[str, Any]:
        _require(body, "kind")
        if body["kind"] == "theme":
            _require(body, "name")
        elif body["kind"] == "evidence":
            if "text" not in body and "anchor" not in body:
                raise EngineError(
                    "validation_error", "body missing field 'text' (or 'anchor')"
                )
        spec = {k: v for k, v in body.items() if k != "expected_revision"}
        node_id, result = engine.mutate(
            workspace_id,
            lambda ws: ws.create_node(spec),
            body.get("expected_revision"),
        )
        return {"node_id": node_id, "revision": result.revision, "delta": result.delta}

    @app.patch("/workspaces/{workspace_id}/nodes/{node_id}")
    def update_node(
        workspace_id: str, node_id: str, body: dict[str, Any]
    ) -> dict[str, Any]:
        patch = {k: v for k, v in body.items() if k != "expected_revision"}
        _, result = engine.mutate(
            workspace_id,
            lambda ws: ws.update_node(node_id, patch),
            body.get("expected_revision"),
        )
        return {"revision": result.revision, "delta": result.delta}

    @app.delete("/workspaces/{workspace_id}/nodes/{node_id}")
    def delete_node(
        workspace_id: str, node_id: str, expected_revision: int | None = None
    ) -> dict[str, Any]:
        _, result = engine.mutate(
            workspace_id, lambda ws: ws.delete_node(node_id), expected_revision
        )
        return {"revision": result.revision, "delta": result.delta}

    @app.post("/workspaces/{workspace_id}/edges", status_code=201)
    def connect(workspace_id: str, body: dict[str, Any]) -> dict[str, Any]:
        _require(body, "from", "to", "kind")
        edge_id, result = engine.mutate(
            workspace_id,
            lambda ws: ws.connect(body["from"], body["to"], body["kind"]),
            body.get("expected_revision"),
        )
        return {"edge_id": edge_id, "revision": result.revision, "delta": result.delta}

    @app.post("/workspaces/{workspace_id}/themes/merge")
    def merge_themes(workspace_id: str, body: dict[str, Any]) -> dict[str, Any]:
        _require(body, "survivor_id", "absorbed_id")
        _, result = engine.mutate(
            workspace_id,
            lambda ws: ws.merge_themes(body["survivor_id"], body["absorbed_id"]),
            body.get("expected_revision"),
        )
        return {"revision": result.revision, "delta": result.delta}

    # -- jobs ------------------------------------------------------------------------

    @app.post("/workspaces/{workspace_id}/jobs", status_code=202)
    def enqueue_job(workspace_id: str, body: dict[str, Any]) -> dict[str, Any]:
        _require(body, "kind")
        ticket = engine.enqueue_job(workspace_id, body["kind"], body.get("params", {}))
        return ticket.to_dict()

    @app.get("/workspaces/{workspace_id}/jobs")
    def list_jobs(workspace_id: str) -> dict[str, Any]:
        engine.get_workspace(workspace_id)
        return {
            "jobs": [
                t.to_dict()
                for _, t in sorted(engine.jobs.items())
                if t.workspace_id == workspace_id
            ]
        }

    @app.get("/jobs/{job_id}")
    def poll_job(job_id: str) -> dict[str, Any]:
        return engine.poll_job(job_id).to_dict()

    # -- suggestions --------------------------------------------------------------------

    @app.post("/suggestions/{suggestion_id}/preview")
    def preview(suggestion_id: str) -> dict[str, Any]:
        workspace = engine.find_suggestion_workspace(suggestion_id)
        delta, _ = engine.mutate(
            workspace.workspace_id,
            lambda ws: suggest.preview_suggestion(ws, suggestion_id),
        )
        return {"suggestion_id": suggestion_id, "delta": delta}

    @app.post("/suggestions/{suggestion_id}/resolve")
    def resolve(suggestion_id: str, body: dict[str, Any]) -> dict[str, Any]:
        _require(body, "decision")
        workspace = engine.find_suggestion_workspace(suggestion_id)
        delta, result = engine.mutate(
            workspace.workspace_id,
            lambda ws: suggest.resolve_suggestion(
                ws, suggestion_id, body["decision"], body.get("payload")
            ),
            body.get("expected_revision"),
        )
        return {
            "suggestion_id": suggestion_id,
            "revision": result.revision,
            "delta": delta or [],
        }

    # -- projections ----------------------------------------------------------------------

    @app.get("/workspaces/{workspace_id}/codebook")
    def codebook(workspace_id: str) -> dict[str, Any]:
        workspace = engine.get_workspace(workspace_id)
        return store.export_codebook_dict(workspace)

    @app.post("/workspaces/{workspace_id}/undo")
    def undo(workspace_id: str, body: dict[str, Any] | None = None) -> dict[str, Any]:
        expected = (body or {}).get("expected_revision")
        revision, _ = engine.mutate(
            workspace_id, lambda ws: ws.undo(), expected
        )
        return {"revision": revision}

    @app.get("/workspaces/{workspace_id}/export")
    def export(workspace_id: str, format: str = "markdown") -> Response:
        workspace = engine.get_workspace(workspace_id)
        payload = store.export_codebook(workspace, format)
        media = "application/json" if format == "json" else "text/markdown"
        return Response(content=payload, media_type=media)

    # -- evaluation --------------------------------------------------------------------------

    @app.post("/workspaces/{workspace_id}/eval")
    def evaluate(workspace_id: str, body: dict[str, Any]) -> dict[str, Any]:
        _require(body, "labeling", "theme_labels")
        if not isinstance(body["theme_labels"], dict):
            raise EngineError(
                "validation_error", "theme_labels must map theme ids to gold labels"
            )
        workspace = engine.get_workspace(workspace_id)
        labeling = load_labeling(body["labeling"])
        matcher = body.get("matcher", "lexical")
        assignments = run_classification(
            labeling.items,
            workspace,
            matcher=matcher,
            provider=engine.provider if matcher == "provider" else None,
        )
        report = score_accuracy(
            assignments,
            labeling,
            body["theme_labels"],
            iteration_tag=body.get("iteration_tag", ""),
            matcher=matcher,
        )
        return report.to_dict()

    return app
