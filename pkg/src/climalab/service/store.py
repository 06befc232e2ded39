"""Directory-per-run persistence with an append-only JSONL event log.

Layout under <runs_dir>/<run_id>/:
  events.jsonl   the authoritative record; everything else is derivable
  plan.json      current plan (rewritten on review edits)
  report.json/.md, committee.json/.md
  workdir/       the lab's run directory (preprocess/, tasks/)
"""

from __future__ import annotations

import json
import threading
import time
import uuid
import zipfile
from pathlib import Path
from typing import Optional

from climalab.errors import ClimalabError
from climalab.service.state import RunState, TERMINAL, check_transition, replay


class UnknownRun(ClimalabError):
    http_status = 404


class RunActive(ClimalabError):
    http_status = 409


class PersistenceFailure(ClimalabError):
    http_status = 500


class RunHandle:
    """One run's log, state, and paths; appends are serialized by a lock."""

    def __init__(self, root: Path, state: RunState):
        self.root = root
        self.state = state
        self.lock = threading.RLock()
        self._events_path = root / "events.jsonl"

    @property
    def run_id(self) -> str:
        return self.state.run_id

    @property
    def workdir(self) -> Path:
        return self.root / "workdir"

    def emit(self, event_type: str, payload: Optional[dict] = None) -> dict:
        with self.lock:
            event = {
                "seq": self.state.last_seq + 1,
                "ts": time.time(),
                "stage": self.state.stage,
                "event_type": event_type,
                "payload": payload or {},
            }
            self.state.apply(event)
            try:
                with self._events_path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(event, sort_keys=True) + "\n")
            except OSError as exc:
                raise PersistenceFailure(f"event append failed: {exc}") from exc
            return event

    def transition(self, target: str, **extra) -> dict:
        with self.lock:
            check_transition(self.state.stage, target)
            payload = {"from": self.state.stage, "to": target, **extra}
            return self.emit("stage_changed", payload)

    def events(self, from_seq: int = 1) -> list[dict]:
        out = []
        with self.lock:
            if not self._events_path.is_file():
                return out
            with self._events_path.open(encoding="utf-8") as fh:
                for line in fh:
                    event = json.loads(line)
                    if event["seq"] >= from_seq:
                        out.append(event)
        return out

    def write_doc(self, name: str, doc) -> Path:
        path = self.root / name
        try:
            if name.endswith(".json"):
                path.write_text(json.dumps(doc, sort_keys=True, indent=1)
                                + "\n", encoding="utf-8")
            else:
                path.write_text(doc, encoding="utf-8")
        except OSError as exc:
            raise PersistenceFailure(f"writing {name} failed: {exc}") from exc
        return path

    def read_doc(self, name: str):
        path = self.root / name
        if not path.is_file():
            return None
        if name.endswith(".json"):
            return json.loads(path.read_text(encoding="utf-8"))
        return path.read_text(encoding="utf-8")


class RunStore:
    def __init__(self, runs_dir):
        self.runs_dir = Path(runs_dir)
        self._handles: dict[str, RunHandle] = {}
        self._lock = threading.Lock()

    def create(self, query: dict, options: dict) -> RunHandle:
        run_id = "run-" + uuid.uuid4().hex[:12]
        root = self.runs_dir / run_id
        try:
            (root / "workdir").mkdir(parents=True)
        except OSError as exc:
            raise PersistenceFailure(f"cannot create run dir: {exc}") from exc
        handle = RunHandle(root, RunState())
        handle.emit("run_created", {
            "run_id": run_id, "query": query, "options": options,
        })
        with self._lock:
            self._handles[run_id] = handle
        return handle

    def open(self, run_id: str) -> RunHandle:
        with self._lock:
            if run_id in self._handles:
                return self._handles[run_id]
        root = self.runs_dir / run_id
        events_path = root / "events.jsonl"
        if not events_path.is_file():
            raise UnknownRun(f"no run {run_id!r}")
        with events_path.open(encoding="utf-8") as fh:
            state = replay(json.loads(line) for line in fh)
        handle = RunHandle(root, state)
        with self._lock:
            return self._handles.setdefault(run_id, handle)

    def list_runs(self) -> list[str]:
        if not self.runs_dir.is_dir():
            return []
        return sorted(p.name for p in self.runs_dir.iterdir()
                      if (p / "events.jsonl").is_file())


def export_archive(handle: RunHandle, dest) -> Path:
    """Zip every artifact with fixed metadata so re-exports are byte-equal."""
    if handle.state.stage not in TERMINAL:
        raise RunActive(
            f"run {handle.run_id} is {handle.state.stage}; export needs a "
            "terminal run"
        )
    dest = Path(dest)
    dest.parent.mkdir(parents=True, exist_ok=True)
    files = sorted(
        p for p in handle.root.rglob("*")
        if p.is_file() and p.resolve() != dest.resolve()
    )
    with zipfile.ZipFile(dest, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        for path in files:
            arcname = f"{handle.run_id}/{path.relative_to(handle.root)}"
            info = zipfile.ZipInfo(arcname, date_time=(1980, 1, 1, 0, 0, 0))
            info.compress_type = zipfile.ZIP_DEFLATED
            info.external_attr = 0o644 << 16
            zf.writestr(info, path.read_bytes())
    return dest
