"""Backend transports: fixture-replay mock, HTTP, and a recording wrapper."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Callable, Optional, Protocol

from climalab.errors import ClimalabError
from climalab.gateway.embedding import EmbeddingVector, hash_embedding
from climalab.gateway.types import Message, ModelRequest, ModelResponse


class FixtureMiss(ClimalabError):
    """No fixture exists for this (messages, seed) key: the test corpus has a gap."""

    http_status = 502


class Backend(Protocol):
    def complete(self, request: ModelRequest) -> ModelResponse: ...

    def embed(self, text: str, dim: int) -> EmbeddingVector: ...


def canonical_messages(messages: tuple[Message, ...]) -> str:
    return json.dumps(
        [{"role": m.role, "text": m.text} for m in messages],
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    )


def fixture_key(messages: tuple[Message, ...], seed: int) -> str:
    """SHA-256 of the canonicalized message list, plus the sampling seed."""
    digest = hashlib.sha256(canonical_messages(messages).encode("utf-8")).hexdigest()
    return f"{digest}_{seed}"


def _usage(messages: tuple[Message, ...], text: str) -> dict:
    return {
        "prompt_tokens": sum(len(m.text.split()) for m in messages),
        "completion_tokens": len(text.split()),
    }


def write_fixture(fixtures_dir, messages: tuple[Message, ...], seed: int, text: str) -> Path:
    """Author one mock fixture file; used by tests and the corpus builder."""
    path = Path(fixtures_dir) / f"{fixture_key(messages, seed)}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps({"text": text}, ensure_ascii=False, indent=2), encoding="utf-8"
    )
    return path


class MockBackend:
    """Strict fixture replay: one JSON file per (message hash, seed) key."""

    def __init__(self, backend_id: str, fixtures_dir):
        self.backend_id = backend_id
        self.fixtures_dir = Path(fixtures_dir)

    def complete(self, request: ModelRequest) -> ModelResponse:
        key = fixture_key(request.messages, request.seed)
        path = self.fixtures_dir / f"{key}.json"
        if not path.is_file():
            raise FixtureMiss(
                f"no fixture for key {key}", key=key, fixtures_dir=str(self.fixtures_dir)
            )
        doc = json.loads(path.read_text(encoding="utf-8"))
        return ModelResponse(
            text=doc["text"],
            backend_id=self.backend_id,
            usage=doc.get("usage") or _usage(request.messages, doc["text"]),
            truncated=bool(doc.get("truncated", False)),
        )

    def embed(self, text: str, dim: int) -> EmbeddingVector:
        return hash_embedding(text, dim)


class HttpBackend:
    """Remote completion endpoint speaking the documented JSON contract."""

    def __init__(self, backend_id: str, endpoint: str, timeout_s: float = 30.0):
        self.backend_id = backend_id
        self.endpoint = endpoint
        self.timeout_s = timeout_s

    def complete(self, request: ModelRequest) -> ModelResponse:
        import httpx

        body = {
            "messages": [{"role": m.role, "text": m.text} for m in request.messages],
            "temperature": request.temperature,
            "seed": request.seed,
            "max_tokens": request.max_tokens,
        }
        try:
            resp = httpx.post(self.endpoint, json=body, timeout=self.timeout_s)
            resp.raise_for_status()
        except httpx.TimeoutException as exc:
            from climalab.gateway.core import BackendTimeout

            raise BackendTimeout(f"backend {self.backend_id} timed out") from exc
        doc = resp.json()
        return ModelResponse(
            text=doc.get("text", ""),
            backend_id=self.backend_id,
            usage=doc.get("usage", {}),
            truncated=bool(doc.get("truncated", False)),
        )

    # Real embedding-model parity is unvalidated; remote backends fall back
    # to the same deterministic hash embedding the mock uses.
    def embed(self, text: str, dim: int) -> EmbeddingVector:
        return hash_embedding(text, dim)


class RecordingBackend:
    """Wraps a responder function and persists every reply as a mock fixture.

    Used only at fixture-build time; tests and runs replay via MockBackend.
    """

    def __init__(self, backend_id: str, fixtures_dir,
                 responder: Callable[[ModelRequest], str]):
        self.backend_id = backend_id
        self.fixtures_dir = Path(fixtures_dir)
        self.responder = responder

    def complete(self, request: ModelRequest) -> ModelResponse:
        text = self.responder(request)
        write_fixture(self.fixtures_dir, request.messages, request.seed, text)
        return ModelResponse(
            text=text, backend_id=self.backend_id, usage=_usage(request.messages, text)
        )

    def embed(self, text: str, dim: int) -> EmbeddingVector:
        return hash_embedding(text, dim)
