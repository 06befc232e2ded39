"""HTTP client for the run service. The command line front end and the
console's end-to-end tests both drive the API through this module, so it
stays a thin mapping: one method per endpoint, errors surfaced as
ServiceError with the server's error envelope attached."""

from __future__ import annotations

import json
import time
from pathlib import Path
from typing import Iterator, Optional

import httpx

from climalab.errors import ClimalabError

TERMINAL_STAGES = ("completed", "failed", "cancelled")


class ServiceError(ClimalabError):
    """Non-2xx response; carries the server's error name and detail."""

    def __init__(self, status_code: int, error: str, detail: str):
        super().__init__(f"{error}: {detail}" if detail else error)
        self.status_code = status_code
        self.error = error
        self.detail = detail


class ServiceClient:
    def __init__(self, base_url: str, timeout_s: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self._http = httpx.Client(base_url=self.base_url, timeout=timeout_s)

    def close(self):
        self._http.close()

    def __enter__(self) -> "ServiceClient":
        return self

    def __exit__(self, *exc):
        self.close()

    def _checked(self, response: httpx.Response) -> httpx.Response:
        if response.status_code >= 400:
            try:
                doc = response.json()
            except ValueError:
                doc = {}
            raise ServiceError(
                response.status_code,
                doc.get("error", f"HTTP{response.status_code}"),
                doc.get("detail", response.text[:200]),
            )
        return response

    def _json(self, response: httpx.Response) -> dict:
        return self._checked(response).json()

    # -- runs ---------------------------------------------------------------

    def create_run(self, query: str, attached_documents=(),
                   auto_approve: bool = False,
                   worker_count: Optional[int] = None,
                   expert_count: Optional[int] = None) -> dict:
        return self._json(self._http.post("/runs", json={
            "query": query,
            "attached_documents": list(attached_documents),
            "auto_approve": auto_approve,
            "worker_count": worker_count,
            "expert_count": expert_count,
        }))

    def list_runs(self) -> list[dict]:
        return self._json(self._http.get("/runs"))["runs"]

    def run(self, run_id: str) -> dict:
        return self._json(self._http.get(f"/runs/{run_id}"))

    def events(self, run_id: str, from_seq: int = 1) -> list[dict]:
        return self._json(self._http.get(
            f"/runs/{run_id}/events", params={"from": from_seq}))["events"]

    def stream_events(self, run_id: str,
                      from_seq: int = 1) -> Iterator[dict]:
        """Tail the run's event stream. The server closes the stream once
        the run is terminal and the backlog is drained; a parked run
        (awaiting_review) keeps it open, so callers decide when to stop."""
        # a parked run can sit quiet for minutes; never time the read out
        request = self._http.build_request(
            "GET", f"/runs/{run_id}/events",
            params={"from": from_seq, "stream": "true"},
            timeout=httpx.Timeout(10.0, read=None),
        )
        response = self._http.send(request, stream=True)
        try:
            self._checked(response)
            data_lines: list[str] = []
            for line in response.iter_lines():
                if line.startswith("data:"):
                    data_lines.append(line[5:].lstrip())
                elif not line and data_lines:
                    yield json.loads("\n".join(data_lines))
                    data_lines = []
        finally:
            response.close()

    def wait(self, run_id: str, stages=TERMINAL_STAGES,
             timeout_s: float = 120.0, poll_s: float = 0.2) -> str:
        deadline = time.monotonic() + timeout_s
        while True:
            stage = self.run(run_id)["stage"]
            if stage in stages or time.monotonic() >= deadline:
                return stage
            time.sleep(poll_s)

    def submit_review(self, run_id: str, approved: bool,
                      reviewer: str = "operator", comment: str = "",
                      edits: Optional[dict] = None) -> dict:
        return self._json(self._http.post(f"/runs/{run_id}/review", json={
            "approved": approved, "reviewer": reviewer,
            "comment": comment, "edits": edits,
        }))

    def submit_verdict(self, run_id: str, task_id: str, approved: bool,
                       reviewer: str = "operator",
                       comment: str = "") -> dict:
        return self._json(self._http.post(
            f"/runs/{run_id}/tasks/{task_id}/verdict",
            json={"approved": approved, "reviewer": reviewer,
                  "comment": comment},
        ))

    def report(self, run_id: str, markdown: bool = False):
        return self._doc(run_id, "report", markdown)

    def committee(self, run_id: str, markdown: bool = False):
        return self._doc(run_id, "committee", markdown)

    def _doc(self, run_id: str, kind: str, markdown: bool):
        params = {"format": "markdown"} if markdown else {}
        response = self._checked(self._http.get(
            f"/runs/{run_id}/{kind}", params=params))
        return response.text if markdown else response.json()

    def export(self, run_id: str, dest) -> Path:
        response = self._checked(self._http.get(f"/runs/{run_id}/export"))
        dest = Path(dest)
        dest.parent.mkdir(parents=True, exist_ok=True)
        dest.write_bytes(response.content)
        return dest

    # -- catalog / library ----------------------------------------------------

    def catalog_query(self, **facets) -> list[dict]:
        params = {k: v for k, v in facets.items() if v is not None}
        return self._json(self._http.get("/catalog/query",
                                         params=params))["rows"]

    def library_records(self, kind: Optional[str] = None,
                        status: Optional[str] = None) -> list[dict]:
        params = {k: v for k, v in
                  (("kind", kind), ("status", status)) if v is not None}
        return self._json(self._http.get("/library/records",
                                         params=params))["records"]

    def add_library_record(self, id: str, kind: str, summary: str,
                           payload: Optional[dict] = None,
                           status: str = "draft",
                           provenance: str = "seeded", run_ref: str = "",
                           replace: bool = False) -> str:
        return self._json(self._http.post("/library/records", json={
            "id": id, "kind": kind, "summary": summary,
            "payload": payload or {}, "status": status,
            "provenance": provenance, "run_ref": run_ref,
            "replace": replace,
        }))["id"]

    # -- eval -----------------------------------------------------------------

    def post_scores(self, scores: list[dict]) -> int:
        return self._json(self._http.post(
            "/eval/scores", json={"scores": scores}))["recorded"]

    def eval_report(self) -> dict:
        return self._json(self._http.get("/eval/report"))
