"""Home-directory seeding: catalog, synthetic data, tool library, web context.

A seeded home plus the bundled reply corpus is everything a run needs; no
network, no live model. The same function serves the corpus builder, the
CLI bootstrap, and the tests, so every home carries the exact library state
the recorded prompts were keyed against.
"""

from __future__ import annotations

import importlib.resources
import json
import shutil
from pathlib import Path
from typing import Optional

from climalab.config import Settings
from climalab.fixtures import catalogdata, gridgen
from climalab.fixtures.responder import DEMO_SUMMARY
from climalab.gateway import hash_embedding
from climalab.library import Library, ToolManifest
from climalab.planner.fetcher import FixtureFetcher

TOOL_DESCRIPTIONS = {
    "convert_units": "convert a Grid-JSON file between units from a fixed "
                     "linear table (K and degC, mm/day and m/s)",
    "regrid": "nearest-neighbor regrid of a [time, lat, lon] grid to a "
              "target lat/lon resolution",
    "subset": "spatial or temporal subset of a [time, lat, lon] grid by "
              "lat, lon, or year ranges",
    "statistic": "per-cell time statistic of a grid: mean, variance, or "
                 "anomaly against a baseline",
}

TOOL_PARAMS = {
    "convert_units": ({"name": "target_units", "type": "str"},),
    "regrid": ({"name": "target", "type": "dict"},),
    "subset": (
        {"name": "lat_range", "type": "list"},
        {"name": "lon_range", "type": "list"},
        {"name": "time_range", "type": "list"},
    ),
    "statistic": (
        {"name": "statistic", "type": "str"},
        {"name": "baseline", "type": "list"},
    ),
}

HELPER_DESCRIPTIONS = {
    "_gridio": "helper module for task scripts: Grid-JSON read/write, "
               "params.json loading, period selection, area-weighted means, "
               "least-squares fits, result manifests, run_tool entrypoint "
               "wrapper",
    "_svgfig": "helper module for task scripts: deterministic SVG "
               "line_chart, scatter_chart, and map_chart builders plus "
               "save_figure, which writes outputs/<name>.svg with its "
               "metadata sidecar",
}

SEED_PLANS = (
    ("plan-seed-001",
     "Global mean surface air temperature anomaly time series for the "
     "historical ensemble relative to a fixed baseline, alongside a "
     "multi-model climatology map"),
    ("plan-seed-002",
     "Precipitation climatology of historical simulations compared against "
     "satellite observations for 1985-2014 with area-weighted bias "
     "statistics"),
)

DEMO_WEB_BLOCKS = [
    {"title": "Model evaluation practice",
     "body": "Multi-model climatology comparisons average each simulation "
             "over the analysis period, compare against a gridded "
             "observational product on a common grid, and report "
             "area-weighted bias statistics."},
    {"title": "Baseline conventions",
     "body": "Anomaly time series are computed against the climatology of "
             "a fixed baseline period so that simulations and observations "
             "share a reference."},
]


def bundled_corpus_dir() -> Path:
    return Path(importlib.resources.files("climalab.fixtures")) / "corpus"


class MissingToolScripts(FileNotFoundError):
    pass


def _copy_tool_scripts(dest: Path, source: Optional[Path]) -> Path:
    if source is None:
        from climalab.config import _default_scripts_dir

        source = _default_scripts_dir()
    source = Path(source)
    if not (source / "_gridio.py").is_file():
        raise MissingToolScripts(
            f"tool scripts not found at {source}; pass scripts_source"
        )
    dest.mkdir(parents=True, exist_ok=True)
    for script in sorted(source.glob("*.py")):
        shutil.copy2(script, dest / script.name)
    return dest


def seed_library(library: Library, tools_dir: Path):
    for name in sorted(TOOL_DESCRIPTIONS):
        library.register_tool(ToolManifest(
            name=name,
            entrypoint=str(tools_dir / f"{name}.py"),
            params_schema=TOOL_PARAMS[name],
            inputs=("grid",),
            outputs=("grid",),
            description=TOOL_DESCRIPTIONS[name],
        ))
    for name in sorted(HELPER_DESCRIPTIONS):
        library.register_tool(ToolManifest(
            name=name,
            entrypoint=str(tools_dir / f"{name}.py"),
            description=HELPER_DESCRIPTIONS[name],
        ))
    for record_id, summary in SEED_PLANS:
        library.index_record(library.build_record(
            id=record_id,
            kind="plan",
            summary=summary,
            payload={"objective": summary},
            provenance="seeded",
            status="validated",
        ), replace_existing=True)


def seed_home(home, llm_fixtures_dir=None, scripts_source=None) -> Settings:
    """Materialize a complete home directory; returns its resolved settings."""
    settings = Settings(home=str(home)).resolved()
    tools_dir = _copy_tool_scripts(Path(home) / "tools",
                                   Path(scripts_source) if scripts_source
                                   else None)
    settings.tool_scripts_dir = str(tools_dir)
    if llm_fixtures_dir is not None:
        settings.llm_fixtures_dir = str(llm_fixtures_dir)

    catalogdata.write_catalog(settings.catalog_path)
    gridgen.generate_data(settings.data_root)

    library = Library(
        settings.library_path,
        embed=lambda text: hash_embedding(text, settings.embedding_dim),
        snapshot_every=settings.library_snapshot_every,
    )
    seed_library(library, tools_dir)

    FixtureFetcher(settings.web_fixtures_dir).store(DEMO_SUMMARY,
                                                    DEMO_WEB_BLOCKS)
    Path(settings.llm_fixtures_dir).mkdir(parents=True, exist_ok=True)
    Path(settings.runs_dir).mkdir(parents=True, exist_ok=True)
    # Later processes reopen the home through this file, so the paths chosen
    # here (home-local tools, possibly the bundled reply corpus) stick.
    config = {
        "home": str(home),
        "tool_scripts_dir": settings.tool_scripts_dir,
        "llm_fixtures_dir": settings.llm_fixtures_dir,
    }
    (Path(home) / "config.json").write_text(
        json.dumps(config, indent=1, sort_keys=True) + "\n", encoding="utf-8"
    )
    return settings
