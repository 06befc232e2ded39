"""Runtime configuration.

Precedence: explicit overrides (CLI flags) > environment variables
(CLIMALAB_* prefix) > config file > built-in defaults.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

ENV_PREFIX = "CLIMALAB_"


@dataclass
class Settings:
    """All tunables, with the defaults the test fixtures rely on."""

    # State directory; everything below defaults to paths inside it.
    home: str = "./climalab-home"

    # Gateway
    embedding_dim: int = 256
    default_backend: str = "mock"
    llm_fixtures_dir: Optional[str] = None  # default: <home>/fixtures/llm
    backend_timeout_s: float = 30.0

    # Catalog / data
    catalog_path: Optional[str] = None  # default: <home>/catalog/catalog.jsonl
    data_root: Optional[str] = None  # default: <home>/data

    # Library
    library_path: Optional[str] = None  # default: <home>/library/records.jsonl
    library_snapshot_every: int = 100
    tool_scripts_dir: Optional[str] = None  # default: <repo>/refscripts

    # Planner
    candidate_count: int = 3
    candidate_temperature: float = 0.7
    web_fixtures_dir: Optional[str] = None  # default: <home>/fixtures/web

    # Lab
    template_similarity_threshold: float = 0.92
    debug_round_cap: int = 15
    exec_timeout_s: float = 120.0
    output_cap_bytes: int = 65536
    worker_count: int = 2
    # Per-variable plausibility ranges keyed by "variable|units".
    plausibility_ranges: dict = field(
        default_factory=lambda: {
            "tas|K": [170.0, 340.0],
            "tas|degC": [-103.15, 66.85],
            "pr|mm/day": [0.0, 500.0],
        }
    )

    # Synthesis
    expert_count: int = 10
    sentiment_confidence_weighted: bool = False

    # Eval harness
    suite_path: Optional[str] = None  # default: bundled paper suite
    scores_path: Optional[str] = None  # default: <home>/eval/scores.csv

    # Service
    runs_dir: Optional[str] = None  # default: <home>/runs
    host: str = "127.0.0.1"
    port: int = 8321

    def resolved(self) -> "Settings":
        """Fill in the home-relative defaults for any unset paths."""
        home = Path(self.home)
        out = dataclasses.replace(self)
        if out.llm_fixtures_dir is None:
            out.llm_fixtures_dir = str(home / "fixtures" / "llm")
        if out.catalog_path is None:
            out.catalog_path = str(home / "catalog" / "catalog.jsonl")
        if out.data_root is None:
            out.data_root = str(home / "data")
        if out.library_path is None:
            out.library_path = str(home / "library" / "records.jsonl")
        if out.web_fixtures_dir is None:
            out.web_fixtures_dir = str(home / "fixtures" / "web")
        if out.runs_dir is None:
            out.runs_dir = str(home / "runs")
        if out.scores_path is None:
            out.scores_path = str(home / "eval" / "scores.csv")
        if out.tool_scripts_dir is None:
            out.tool_scripts_dir = str(_default_scripts_dir())
        return out


def _default_scripts_dir() -> Path:
    # The reference tool scripts live in refscripts/ at the repo root,
    # next to src/. Falls back to cwd for installed deployments.
    candidate = Path(__file__).resolve().parent.parent.parent / "refscripts"
    if candidate.is_dir():
        return candidate
    return Path.cwd() / "refscripts"


def _coerce(value: str, target_type: Any) -> Any:
    if target_type is bool:
        return value.lower() in ("1", "true", "yes", "on")
    if target_type is int:
        return int(value)
    if target_type is float:
        return float(value)
    if target_type is dict:
        return json.loads(value)
    return value


def load_settings(
    config_file: Optional[str] = None,
    env: Optional[dict] = None,
    overrides: Optional[dict] = None,
) -> Settings:
    """Build Settings honoring the documented precedence order."""
    values: dict[str, Any] = {}

    if config_file:
        raw = json.loads(Path(config_file).read_text(encoding="utf-8"))
        for key, val in raw.items():
            if key in Settings.__dataclass_fields__:
                values[key] = val

    env = os.environ if env is None else env
    for f in dataclasses.fields(Settings):
        env_key = ENV_PREFIX + f.name.upper()
        if env_key in env:
            base_type = f.type if isinstance(f.type, type) else None
            # Optional[str] fields and plain strings both come through as-is.
            target = {"int": int, "float": float, "bool": bool, "dict": dict}.get(
                str(f.type).replace("typing.", ""), base_type or str
            )
            values[f.name] = _coerce(env[env_key], target)

    for key, val in (overrides or {}).items():
        if val is not None and key in Settings.__dataclass_fields__:
            values[key] = val

    return Settings(**values)
