"""Record store backing self-evolution: append-only log, flat-scan retrieval.

Retrieval is a brute-force cosine scan. At desk scale that IS the contract
(ties broken by ascending id); an ANN index would be an optimization with
the same observable behavior.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from climalab.errors import ClimalabError
from climalab.gateway import EmbeddingVector, cosine

KINDS = ("plan", "template", "tool_doc")
PROVENANCES = ("seeded", "promoted")
STATUSES = ("draft", "validated")


class InvalidRecord(ClimalabError):
    http_status = 422


class EmbeddingMismatch(ClimalabError):
    http_status = 422


class DuplicateIdConflict(ClimalabError):
    http_status = 409


class InvalidK(ClimalabError):
    http_status = 400


class NotApproved(ClimalabError):
    http_status = 403


class MissingRunReference(ClimalabError):
    http_status = 422


@dataclass(frozen=True)
class TemplateRecord:
    """The query-code-result triplet stored on promotion."""

    query_text: str
    code: str
    result_digest: str
    runtime_tag: str = "python3"

    def check(self):
        for name in ("query_text", "code", "result_digest"):
            if not getattr(self, name):
                raise InvalidRecord(f"template triplet missing {name}")

    def to_payload(self) -> dict:
        return {
            "query_text": self.query_text,
            "code": self.code,
            "result_digest": self.result_digest,
            "runtime_tag": self.runtime_tag,
        }


@dataclass(frozen=True)
class ToolManifest:
    name: str
    entrypoint: str
    runtime_tag: str = "python3"
    params_schema: tuple = ()
    inputs: tuple = ()
    outputs: tuple = ()
    description: str = ""

    def check(self, require_entrypoint=True):
        if not self.name:
            raise InvalidRecord("tool manifest needs a name")
        names = [p.get("name") for p in self.params_schema]
        if len(names) != len(set(names)):
            raise InvalidRecord(f"duplicate parameter names in {self.name}")
        if require_entrypoint and not Path(self.entrypoint).is_file():
            raise InvalidRecord(
                f"entrypoint {self.entrypoint} does not exist", tool=self.name
            )

    def to_payload(self) -> dict:
        return {
            "name": self.name,
            "entrypoint": self.entrypoint,
            "runtime_tag": self.runtime_tag,
            "params_schema": list(self.params_schema),
            "inputs": list(self.inputs),
            "outputs": list(self.outputs),
            "description": self.description,
        }

    @staticmethod
    def from_payload(doc: dict) -> "ToolManifest":
        return ToolManifest(
            name=doc["name"],
            entrypoint=doc["entrypoint"],
            runtime_tag=doc.get("runtime_tag", "python3"),
            params_schema=tuple(doc.get("params_schema", ())),
            inputs=tuple(doc.get("inputs", ())),
            outputs=tuple(doc.get("outputs", ())),
            description=doc.get("description", ""),
        )


@dataclass(frozen=True)
class KnowledgeRecord:
    id: str
    kind: str
    summary: str
    embedding: EmbeddingVector
    payload: dict = field(default_factory=dict)
    provenance: str = "seeded"
    status: str = "draft"
    created_at: float = 0.0
    run_ref: str = ""

    def check(self):
        if not self.id:
            raise InvalidRecord("record id must be non-empty")
        if self.kind not in KINDS:
            raise InvalidRecord(f"unknown kind {self.kind!r}", allowed=list(KINDS))
        if self.provenance not in PROVENANCES:
            raise InvalidRecord(f"unknown provenance {self.provenance!r}")
        if self.status not in STATUSES:
            raise InvalidRecord(f"unknown status {self.status!r}")
        if self.provenance == "promoted" and not self.run_ref:
            raise InvalidRecord("promoted records must carry the producing run id")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "summary": self.summary,
            "embedding": self.embedding.to_list(),
            "payload": self.payload,
            "provenance": self.provenance,
            "status": self.status,
            "created_at": self.created_at,
            "run_ref": self.run_ref,
        }

    @staticmethod
    def from_dict(doc: dict) -> "KnowledgeRecord":
        return KnowledgeRecord(
            id=doc["id"],
            kind=doc["kind"],
            summary=doc["summary"],
            embedding=EmbeddingVector.from_list(doc["embedding"]),
            payload=doc.get("payload", {}),
            provenance=doc.get("provenance", "seeded"),
            status=doc.get("status", "draft"),
            created_at=doc.get("created_at", 0.0),
            run_ref=doc.get("run_ref", ""),
        )

    def content_equal(self, other: "KnowledgeRecord") -> bool:
        return (
            self.kind == other.kind
            and self.summary == other.summary
            and self.payload == other.payload
            and self.provenance == other.provenance
            and self.status == other.status
        )


def template_id(triplet: TemplateRecord) -> str:
    digest = hashlib.sha256(
        "\x1f".join(
            (triplet.query_text, triplet.code, triplet.result_digest)
        ).encode("utf-8")
    ).hexdigest()
    return f"tpl-{digest[:12]}"


class Library:
    def __init__(self, log_path, embed: Callable[[str], EmbeddingVector],
                 snapshot_every: int = 100):
        self.log_path = Path(log_path)
        self.snapshot_path = self.log_path.with_suffix(".snapshot.json")
        self.embed = embed
        self.snapshot_every = max(1, snapshot_every)
        self._records: dict[str, KnowledgeRecord] = {}
        self._order: list[str] = []  # insertion order, survives re-index
        self._seq = 0
        self._lock = threading.RLock()
        self._load()

    # -- persistence ------------------------------------------------------

    def _load(self):
        if self.snapshot_path.is_file():
            snap = json.loads(self.snapshot_path.read_text(encoding="utf-8"))
            self._seq = snap["seq"]
            for doc in snap["records"]:
                rec = KnowledgeRecord.from_dict(doc)
                self._records[rec.id] = rec
                self._order.append(rec.id)
        if self.log_path.is_file():
            with self.log_path.open(encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    entry = json.loads(line)
                    if entry["seq"] <= self._seq:
                        continue
                    self._seq = entry["seq"]
                    rec = KnowledgeRecord.from_dict(entry["record"])
                    self._apply(rec)

    def _apply(self, rec: KnowledgeRecord):
        if rec.id not in self._records:
            self._order.append(rec.id)
        self._records[rec.id] = rec

    def _append(self, rec: KnowledgeRecord):
        self._seq += 1
        self.log_path.parent.mkdir(parents=True, exist_ok=True)
        with self.log_path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps({"seq": self._seq, "record": rec.to_dict()},
                                sort_keys=True) + "\n")
        if self._seq % self.snapshot_every == 0:
            self._write_snapshot()

    def _write_snapshot(self):
        docs = [self._records[rid].to_dict() for rid in self._order]
        tmp = self.snapshot_path.with_suffix(".tmp")
        tmp.write_text(
            json.dumps({"seq": self._seq, "records": docs}, sort_keys=True),
            encoding="utf-8",
        )
        tmp.replace(self.snapshot_path)

    # -- operations -------------------------------------------------------

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)

    def index_record(self, record: KnowledgeRecord, replace_existing: bool = False) -> str:
        record.check()
        expected = self.embed(record.summary)
        if record.embedding != expected:
            raise EmbeddingMismatch(
                f"stored embedding does not match embed(summary) for {record.id}"
            )
        with self._lock:
            existing = self._records.get(record.id)
            if existing is not None:
                if existing.content_equal(record):
                    return record.id
                if not replace_existing:
                    raise DuplicateIdConflict(
                        f"record {record.id} exists with different content"
                    )
            self._apply(record)
            self._append(record)
        return record.id

    def build_record(self, id: str, kind: str, summary: str, payload: dict,
                     provenance: str = "seeded", status: str = "draft",
                     run_ref: str = "") -> KnowledgeRecord:
        return KnowledgeRecord(
            id=id,
            kind=kind,
            summary=summary,
            embedding=self.embed(summary),
            payload=payload,
            provenance=provenance,
            status=status,
            created_at=time.time(),
            run_ref=run_ref,
        )

    def get(self, record_id: str) -> Optional[KnowledgeRecord]:
        with self._lock:
            return self._records.get(record_id)

    def retrieve(self, query_vec: EmbeddingVector, k: int,
                 kind: Optional[str] = None,
                 status: Optional[str] = None) -> list[tuple[KnowledgeRecord, float]]:
        if not isinstance(k, int) or k <= 0:
            raise InvalidK(f"k must be a positive integer, got {k!r}")
        with self._lock:
            candidates = [
                r for r in self._records.values()
                if (kind is None or r.kind == kind)
                and (status is None or r.status == status)
            ]
        scored = [(r, cosine(query_vec, r.embedding)) for r in candidates]
        scored.sort(key=lambda pair: (-pair[1], pair[0].id))
        return scored[:k]

    def retrieve_text(self, text: str, k: int, kind: Optional[str] = None,
                      status: Optional[str] = None):
        return self.retrieve(self.embed(text), k, kind=kind, status=status)

    def promote_template(self, triplet: TemplateRecord, approval) -> str:
        triplet.check()
        if not getattr(approval, "approved", False):
            raise NotApproved("promotion requires an approving review")
        run_ref = getattr(approval, "run_ref", "") or ""
        if not run_ref:
            raise MissingRunReference("approval must reference the producing run")
        rec = self.build_record(
            id=template_id(triplet),
            kind="template",
            summary=triplet.query_text,
            payload=triplet.to_payload(),
            provenance="promoted",
            status="validated",
            run_ref=run_ref,
        )
        return self.index_record(rec, replace_existing=True)

    def queue_draft(self, triplet: TemplateRecord, run_ref: str) -> str:
        """Store an unapproved triplet; validated retrieval filters exclude it."""
        triplet.check()
        if not run_ref:
            raise MissingRunReference("draft must reference the producing run")
        existing = self.get(template_id(triplet))
        if existing is not None and existing.status == "validated":
            # re-deriving the same triplet never revokes a human approval
            return existing.id
        rec = self.build_record(
            id=template_id(triplet),
            kind="template",
            summary=triplet.query_text,
            payload=triplet.to_payload(),
            provenance="promoted",
            status="draft",
            run_ref=run_ref,
        )
        return self.index_record(rec, replace_existing=True)

    def register_tool(self, manifest: ToolManifest, require_entrypoint=True) -> str:
        manifest.check(require_entrypoint=require_entrypoint)
        summary = f"{manifest.name} {manifest.description}".strip()
        rec = self.build_record(
            id=f"tool-{manifest.name}",
            kind="tool_doc",
            summary=summary,
            payload=manifest.to_payload(),
            status="validated",
        )
        return self.index_record(rec, replace_existing=True)

    def get_tool(self, name: str) -> Optional[ToolManifest]:
        rec = self.get(f"tool-{name}")
        if rec is None or rec.kind != "tool_doc":
            return None
        return ToolManifest.from_payload(rec.payload)

    def list_records(self, kind: Optional[str] = None,
                     status: Optional[str] = None) -> list[KnowledgeRecord]:
        with self._lock:
            rows = [self._records[rid] for rid in self._order]
        rows = [
            r for r in rows
            if (kind is None or r.kind == kind)
            and (status is None or r.status == status)
        ]
        order = {rid: i for i, rid in enumerate(self._order)}
        rows.sort(key=lambda r: (r.created_at, order[r.id]))
        return rows
