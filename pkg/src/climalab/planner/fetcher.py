"""Offline stand-in for web search: fixture files keyed by query hash."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path


def query_key(query: str) -> str:
    return hashlib.sha256(query.encode("utf-8")).hexdigest()[:16]


class FixtureFetcher:
    """Returns pre-extracted context blocks for known queries, else nothing.

    A live HTTP fetcher would be a drop-in replacement; tests and fixtures
    never depend on the network.
    """

    def __init__(self, fixtures_dir):
        self.fixtures_dir = Path(fixtures_dir)

    def fetch(self, query: str) -> list[dict]:
        path = self.fixtures_dir / f"{query_key(query)}.json"
        if not path.is_file():
            return []
        blocks = json.loads(path.read_text(encoding="utf-8"))
        return [
            {"title": b.get("title", ""), "body": b.get("body", "")}
            for b in blocks
        ]

    def store(self, query: str, blocks: list[dict]) -> Path:
        self.fixtures_dir.mkdir(parents=True, exist_ok=True)
        path = self.fixtures_dir / f"{query_key(query)}.json"
        path.write_text(json.dumps(blocks, sort_keys=True, indent=1),
                        encoding="utf-8")
        return path
