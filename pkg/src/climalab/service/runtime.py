"""Builds the shared component graph the API, CLI, and tests all run on."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from climalab.catalog import Catalog, load_catalog
from climalab.config import Settings
from climalab.errors import ClimalabError
from climalab.evalharness.core import EvalStore, default_store
from climalab.gateway import Gateway
from climalab.library import Library
from climalab.planner import FixtureFetcher
from climalab.service.orchestrator import Orchestrator
from climalab.service.store import RunStore


class HomeNotInitialized(ClimalabError):
    http_status = 500


@dataclass
class Runtime:
    settings: Settings
    gateway: Gateway
    library: Library
    catalog: Catalog
    store: RunStore
    orchestrator: Orchestrator
    eval_store: EvalStore


def build_runtime(settings: Settings,
                  backend=None) -> Runtime:
    """Wire the component graph. `backend` overrides the default mock
    backend registration; anything with complete()/embed() qualifies."""
    settings = settings.resolved()

    gateway = Gateway(embedding_dim=settings.embedding_dim,
                      timeout_s=settings.backend_timeout_s)
    if backend is not None:
        gateway.register(settings.default_backend, backend)
    elif settings.default_backend == "mock":
        Path(settings.llm_fixtures_dir).mkdir(parents=True, exist_ok=True)
        gateway.register_backend({
            "id": "mock", "kind": "mock",
            "fixtures_dir": settings.llm_fixtures_dir,
        })

    library = Library(settings.library_path, embed=gateway.embed,
                      snapshot_every=settings.library_snapshot_every)

    catalog_path = Path(settings.catalog_path)
    if not catalog_path.is_file():
        raise HomeNotInitialized(
            f"no catalog at {catalog_path}; run `climalab fixtures build` "
            "to seed a home directory"
        )
    catalog = load_catalog(catalog_path, data_root=settings.data_root)

    store = RunStore(settings.runs_dir)
    fetcher = FixtureFetcher(settings.web_fixtures_dir)
    orchestrator = Orchestrator(settings, gateway, library, catalog, store,
                                fetcher=fetcher)
    eval_store = default_store(suite_path=settings.suite_path,
                               scores_path=settings.scores_path)
    return Runtime(settings=settings, gateway=gateway, library=library,
                   catalog=catalog, store=store, orchestrator=orchestrator,
                   eval_store=eval_store)


def build_app(settings: Settings, backend=None):
    from climalab.service.api import create_app

    runtime = build_runtime(settings, backend=backend)
    return create_app(runtime.orchestrator, runtime.eval_store)
