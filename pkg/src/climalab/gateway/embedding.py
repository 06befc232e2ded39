"""Deterministic token-hash embeddings.

Texts are lowercased, split on non-alphanumerics, each token hashed
(SHA-256) into one of D buckets, and the count vector L2-normalized.
The same text always embeds to the same vector for a given D, which is
what lets retrieval tests use an exact brute-force oracle.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass

import numpy as np

_TOKEN_SPLIT = re.compile(r"[^0-9a-z]+")


@dataclass(frozen=True)
class EmbeddingVector:
    """Fixed-dimension real vector, unit L2 norm unless the text was empty."""

    values: tuple[float, ...]

    @property
    def dim(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)

    @property
    def is_zero(self) -> bool:
        return all(v == 0.0 for v in self.values)

    def to_list(self) -> list[float]:
        return list(self.values)

    @staticmethod
    def from_list(values) -> "EmbeddingVector":
        return EmbeddingVector(tuple(float(v) for v in values))


def tokenize(text: str) -> list[str]:
    return [t for t in _TOKEN_SPLIT.split(text.lower()) if t]


def hash_embedding(text: str, dim: int) -> EmbeddingVector:
    """Bag-of-hashed-tokens embedding; empty text maps to the zero vector."""
    if dim <= 0:
        raise ValueError("embedding dimension must be positive")
    counts = np.zeros(dim, dtype=np.float64)
    for token in tokenize(text):
        digest = hashlib.sha256(token.encode("utf-8")).digest()
        bucket = int.from_bytes(digest[:8], "big") % dim
        counts[bucket] += 1.0
    norm = float(np.linalg.norm(counts))
    if norm > 0.0:
        counts /= norm
    return EmbeddingVector(tuple(float(v) for v in counts))


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Cosine similarity; zero vectors have similarity 0 with everything."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    if a.is_zero or b.is_zero:
        return 0.0
    # Stored vectors are already unit-norm; renormalize defensively so the
    # value stays in [-1, 1] even for hand-built vectors.
    av, bv = a.as_array(), b.as_array()
    denom = float(np.linalg.norm(av) * np.linalg.norm(bv))
    return float(np.dot(av, bv) / denom)
