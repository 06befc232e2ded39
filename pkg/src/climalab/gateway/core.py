"""Gateway registry: routes completion and embedding calls to named backends."""

from __future__ import annotations

import threading
from typing import Optional

from climalab.errors import ClimalabError
from climalab.gateway.backends import Backend, HttpBackend, MockBackend
from climalab.gateway.embedding import EmbeddingVector, hash_embedding
from climalab.gateway.types import ModelRequest, ModelResponse


class UnknownBackend(ClimalabError):
    http_status = 404


class BackendTimeout(ClimalabError):
    http_status = 504


class DuplicateId(ClimalabError):
    http_status = 409


class InvalidDescriptor(ClimalabError):
    http_status = 422


_KINDS = ("mock", "http")


class Gateway:
    """Thread-safe registry of model backends.

    Descriptors are plain dicts: {"id": str, "kind": "mock"|"http", ...}.
    Mock backends need "fixtures_dir"; http backends need "endpoint".
    """

    def __init__(self, embedding_dim: int = 256, timeout_s: float = 30.0):
        if embedding_dim <= 0:
            raise InvalidDescriptor("embedding_dim must be positive")
        self.embedding_dim = embedding_dim
        self.timeout_s = timeout_s
        self._backends: dict[str, Backend] = {}
        self._lock = threading.Lock()

    def register_backend(self, descriptor: dict) -> str:
        if not isinstance(descriptor, dict):
            raise InvalidDescriptor("descriptor must be a mapping")
        backend_id = descriptor.get("id")
        kind = descriptor.get("kind")
        if not backend_id or not isinstance(backend_id, str):
            raise InvalidDescriptor("descriptor needs a non-empty string 'id'")
        if kind not in _KINDS:
            raise InvalidDescriptor(
                f"unknown backend kind {kind!r}", allowed=list(_KINDS)
            )
        if kind == "mock":
            fixtures_dir = descriptor.get("fixtures_dir")
            if not fixtures_dir:
                raise InvalidDescriptor("mock backend needs 'fixtures_dir'")
            backend: Backend = MockBackend(backend_id, fixtures_dir)
        else:
            endpoint = descriptor.get("endpoint")
            if not endpoint or not isinstance(endpoint, str):
                raise InvalidDescriptor("http backend needs an 'endpoint' URL")
            backend = HttpBackend(
                backend_id, endpoint, float(descriptor.get("timeout_s", self.timeout_s))
            )
        with self._lock:
            if backend_id in self._backends:
                raise DuplicateId(f"backend {backend_id!r} already registered")
            self._backends[backend_id] = backend
        return backend_id

    def register(self, backend_id: str, backend: Backend) -> str:
        """Register an already-constructed backend object (recording, tests)."""
        with self._lock:
            if backend_id in self._backends:
                raise DuplicateId(f"backend {backend_id!r} already registered")
            self._backends[backend_id] = backend
        return backend_id

    def _get(self, backend_id: str) -> Backend:
        with self._lock:
            backend = self._backends.get(backend_id)
        if backend is None:
            raise UnknownBackend(f"no backend registered as {backend_id!r}")
        return backend

    def backends(self) -> list[str]:
        with self._lock:
            return sorted(self._backends)

    def complete(self, backend_id: str, request: ModelRequest) -> ModelResponse:
        return self._get(backend_id).complete(request)

    def embed(self, text: str, backend_id: Optional[str] = None) -> EmbeddingVector:
        if backend_id is None:
            return hash_embedding(text, self.embedding_dim)
        return self._get(backend_id).embed(text, self.embedding_dim)
