"""Uniform interface to model completion and text embedding.

Every agent call in the system goes through a Gateway. The mock backend
replays a fixture corpus keyed by (message hash, seed), which makes full
pipeline runs reproducible without a live model.
"""

from climalab.gateway.core import (
    BackendTimeout,
    DuplicateId,
    Gateway,
    InvalidDescriptor,
    UnknownBackend,
)
from climalab.gateway.backends import FixtureMiss, MockBackend, fixture_key, write_fixture
from climalab.gateway.embedding import EmbeddingVector, cosine, hash_embedding
from climalab.gateway.types import Message, ModelRequest, ModelResponse

__all__ = [
    "Gateway",
    "Message",
    "ModelRequest",
    "ModelResponse",
    "EmbeddingVector",
    "MockBackend",
    "fixture_key",
    "write_fixture",
    "hash_embedding",
    "cosine",
    "UnknownBackend",
    "BackendTimeout",
    "FixtureMiss",
    "DuplicateId",
    "InvalidDescriptor",
]
