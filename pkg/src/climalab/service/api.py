"""HTTP surface over the orchestrator. All endpoints are JSON except the
event stream (server-sent events) and the Markdown report variants."""

from __future__ import annotations

import asyncio
import json
from typing import Optional

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse, PlainTextResponse, StreamingResponse
from pydantic import BaseModel, Field

from climalab.catalog import CatalogQuery
from climalab.errors import ClimalabError
from climalab.evalharness.core import ReviewerScore
from climalab.planner import ReviewDecision
from climalab.service.state import TERMINAL

STREAM_POLL_S = 0.05


class MissingDocument(ClimalabError):
    http_status = 404


class CreateRunRequest(BaseModel):
    query: str
    attached_documents: list[dict] = Field(default_factory=list)
    auto_approve: bool = False
    worker_count: Optional[int] = None
    expert_count: Optional[int] = None


class ReviewRequest(BaseModel):
    approved: bool
    reviewer: str = "operator"
    comment: str = ""
    edits: Optional[dict] = None


class VerdictRequest(BaseModel):
    approved: bool
    reviewer: str = "operator"
    comment: str = ""


class ScoreEntry(BaseModel):
    task_id: str
    reviewer: str
    dimension: str
    value: int


class ScoresRequest(BaseModel):
    scores: list[ScoreEntry]


class RecordRequest(BaseModel):
    id: str
    kind: str
    summary: str
    payload: dict = Field(default_factory=dict)
    status: str = "draft"
    provenance: str = "seeded"
    run_ref: str = ""
    replace: bool = False


def _sse(event: dict) -> str:
    return f"id: {event['seq']}\ndata: {json.dumps(event)}\n\n"


def create_app(orchestrator, eval_store) -> FastAPI:
    app = FastAPI(title="climalab", docs_url=None, redoc_url=None)
    app.state.orchestrator = orchestrator
    app.state.eval_store = eval_store

    @app.exception_handler(ClimalabError)
    async def climalab_error(_request: Request, exc: ClimalabError):
        return JSONResponse(
            status_code=getattr(exc, "http_status", 400),
            content={"error": exc.__class__.__name__, "detail": str(exc)},
        )

    @app.post("/runs", status_code=201)
    async def create_run(body: CreateRunRequest):
        run_id = await asyncio.to_thread(
            orchestrator.create_run,
            body.query,
            attached_documents=body.attached_documents,
            auto_approve=body.auto_approve,
            worker_count=body.worker_count,
            expert_count=body.expert_count,
        )
        handle = orchestrator.open_run(run_id)
        return {"run_id": run_id, "stage": handle.state.stage}

    @app.get("/runs")
    async def list_runs():
        rows = []
        for run_id in orchestrator.store.list_runs():
            handle = orchestrator.open_run(run_id)
            rows.append({
                "run_id": run_id,
                "stage": handle.state.stage,
                "query": handle.state.query.get("text", ""),
            })
        return {"count": len(rows), "runs": rows}

    @app.get("/runs/{run_id}")
    async def get_run(run_id: str):
        handle = orchestrator.open_run(run_id)
        snapshot = handle.state.snapshot()
        snapshot["plan"] = handle.read_doc("plan.json")
        return snapshot

    @app.get("/runs/{run_id}/events")
    async def get_events(run_id: str,
                         request: Request,
                         from_seq: int = Query(default=1, alias="from"),
                         stream: bool = False):
        handle = orchestrator.open_run(run_id)
        wants_stream = stream or (
            "text/event-stream" in request.headers.get("accept", ""))
        if not wants_stream:
            return {"events": handle.events(from_seq)}

        async def tail():
            cursor = from_seq
            while True:
                events = await asyncio.to_thread(handle.events, cursor)
                for event in events:
                    cursor = event["seq"] + 1
                    yield _sse(event)
                if handle.state.stage in TERMINAL and not events:
                    break
                if await request.is_disconnected():
                    break
                await asyncio.sleep(STREAM_POLL_S)

        return StreamingResponse(tail(), media_type="text/event-stream")

    @app.post("/runs/{run_id}/review")
    async def submit_review(run_id: str, body: ReviewRequest):
        decision = ReviewDecision(
            reviewer=body.reviewer, approved=body.approved,
            comment=body.comment, edits=body.edits,
        )
        stage = await asyncio.to_thread(
            orchestrator.submit_review, run_id, decision)
        return {"run_id": run_id, "stage": stage}

    @app.post("/runs/{run_id}/tasks/{task_id}/verdict")
    async def submit_verdict(run_id: str, task_id: str, body: VerdictRequest):
        outcome = await asyncio.to_thread(
            orchestrator.submit_verdict, run_id, task_id,
            body.approved, reviewer=body.reviewer, comment=body.comment,
        )
        return {"run_id": run_id, "task_id": task_id, **outcome}

    def _doc_endpoint(run_id: str, kind: str, fmt: str):
        handle = orchestrator.open_run(run_id)
        name = f"{kind}.md" if fmt == "markdown" else f"{kind}.json"
        doc = handle.read_doc(name)
        if doc is None:
            raise MissingDocument(f"run {run_id} has no {kind} yet")
        if fmt == "markdown":
            return PlainTextResponse(doc, media_type="text/markdown")
        return JSONResponse(doc)

    @app.get("/runs/{run_id}/report")
    async def get_report(run_id: str, format: str = "json"):
        return _doc_endpoint(run_id, "report", format)

    @app.get("/runs/{run_id}/committee")
    async def get_committee(run_id: str, format: str = "json"):
        return _doc_endpoint(run_id, "committee", format)

    @app.get("/runs/{run_id}/export")
    async def export_run(run_id: str):
        from climalab.service.store import export_archive

        handle = orchestrator.open_run(run_id)
        dest = handle.root / "export.zip"
        path = await asyncio.to_thread(export_archive, handle, dest)
        return StreamingResponse(
            iter([path.read_bytes()]), media_type="application/zip")

    @app.get("/catalog/query")
    async def catalog_query(activity: Optional[str] = None,
                            experiment: Optional[str] = None,
                            source_model: Optional[str] = None,
                            ensemble_member: Optional[str] = None,
                            variable: Optional[str] = None,
                            frequency: Optional[str] = None):
        q = CatalogQuery(
            activity=activity, experiment=experiment,
            source_model=source_model, ensemble_member=ensemble_member,
            variable=variable, frequency=frequency,
        )
        hits = orchestrator.catalog.query_datasets(q)
        return {"count": len(hits), "rows": [vars(d) for d in hits]}

    @app.get("/library/records")
    async def list_records(kind: Optional[str] = None,
                           status: Optional[str] = None):
        records = orchestrator.library.list_records(kind=kind, status=status)
        return {"count": len(records),
                "records": [r.to_dict() for r in records]}

    @app.post("/library/records", status_code=201)
    async def add_record(body: RecordRequest):
        library = orchestrator.library
        record = library.build_record(
            id=body.id, kind=body.kind, summary=body.summary,
            payload=body.payload, status=body.status,
            provenance=body.provenance, run_ref=body.run_ref,
        )
        record_id = library.index_record(record,
                                         replace_existing=body.replace)
        return {"id": record_id}

    @app.post("/eval/scores")
    async def post_scores(body: ScoresRequest):
        for entry in body.scores:
            eval_store.record_score(ReviewerScore(
                entry.task_id, entry.reviewer, entry.dimension, entry.value))
        return {"recorded": len(body.scores)}

    @app.get("/eval/report")
    async def eval_report():
        return eval_store.suite_report()

    return app
