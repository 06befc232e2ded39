"""Reply-corpus builder: drives the real service against scripted replies.

Each scenario runs in its own freshly seeded home so the library state at
every prompt matches what a test starting from seed_home will produce.
Recorded fixture files are keyed by prompt content, so scenarios sharing a
prompt simply overwrite each other with identical bytes.
"""

from __future__ import annotations

import tempfile
from pathlib import Path
from typing import Callable, Optional

from climalab.fixtures.home import bundled_corpus_dir, seed_home
from climalab.fixtures.responder import DEMO_QUERY, ScriptedResponder
from climalab.gateway.backends import RecordingBackend
from climalab.planner.schema import ReviewDecision
from climalab.service.runtime import build_runtime

REVISION_COMMENT = "Add a fitted linear trend to the anomaly series figure."
DRILL_ROUNDS = (1, 3, 15, 16)
WAIT_S = 600.0


def drill_query(n: int) -> str:
    return (f"repair drill: the diagnostic script must fail {n} times "
            "before the fix lands")


class ScenarioDrift(RuntimeError):
    """A scenario no longer plays out the way the corpus assumes."""


def _check(condition: bool, message: str):
    if not condition:
        raise ScenarioDrift(message)


def _fail_detail(handle) -> str:
    for event in reversed(handle.events()):
        if event["event_type"] == "stage_changed" and \
                event["payload"].get("stage") == "failed":
            return str(event["payload"])
    return "(no failure event)"


def _runtime(home: Path, corpus_dir: Path):
    settings = seed_home(home, llm_fixtures_dir=corpus_dir)
    backend = RecordingBackend("mock", corpus_dir, ScriptedResponder())
    return build_runtime(settings, backend=backend)


def _run_to_stage(orch, run_id: str, expected: str):
    stage = orch.wait(run_id, timeout_s=WAIT_S)
    if stage != expected:
        handle = orch.open_run(run_id)
        raise ScenarioDrift(
            f"run {run_id} parked at {stage!r}, wanted {expected!r}: "
            f"{_fail_detail(handle)}"
        )
    return orch.open_run(run_id)


def record_demo(home: Path, corpus_dir: Path) -> list[str]:
    """Cold demo run, template promotion, warm rerun adapting the template."""
    orch = _runtime(home, corpus_dir).orchestrator

    run_a = orch.create_run(DEMO_QUERY, auto_approve=True)
    handle = _run_to_stage(orch, run_a, "completed")
    figures = [e for e in handle.events()
               if e["event_type"] == "figure_interpreted"]
    _check(len(figures) >= 4, f"demo produced {len(figures)} figures")

    promoted = orch.submit_verdict(run_a, "anomaly-series", approved=True)
    _check(bool(promoted["template_id"]), "verdict promoted no template")

    run_b = orch.create_run(DEMO_QUERY, auto_approve=True)
    handle = _run_to_stage(orch, run_b, "completed")
    sources = {
        e["payload"]["task"]: e["payload"]["source"]
        for e in handle.events() if e["event_type"] == "task_code_ready"
    }
    _check(sources.get("anomaly-series") == "template_adapted",
           f"warm rerun sources: {sources}")
    return [run_a, run_b]


def record_review_cycle(home: Path, corpus_dir: Path) -> list[str]:
    """Reject with a comment, approve the revised plan, run it through."""
    orch = _runtime(home, corpus_dir).orchestrator

    run_id = orch.create_run(DEMO_QUERY)
    _run_to_stage(orch, run_id, "awaiting_review")
    orch.submit_review(run_id, ReviewDecision(
        approved=False, comment=REVISION_COMMENT, reviewer="operator",
    ))
    handle = _run_to_stage(orch, run_id, "awaiting_review")
    plan = handle.read_doc("plan.json")
    revised = [t for t in plan["diagnostics"]
               if "fitted linear trend" in t["description"]]
    _check(bool(revised), "revised plan carries no trend task")
    orch.submit_review(run_id, ReviewDecision(approved=True,
                                              reviewer="operator"))
    _run_to_stage(orch, run_id, "completed")
    return [run_id]


def record_repair_drills(home: Path, corpus_dir: Path) -> list[str]:
    """Scripted failure drills across the repair-loop budget, incl. one bust."""
    orch = _runtime(home, corpus_dir).orchestrator
    runs = []
    for n in DRILL_ROUNDS:
        run_id = orch.create_run(drill_query(n), auto_approve=True)
        expected = "failed" if n > 15 else "completed"
        handle = _run_to_stage(orch, run_id, expected)
        rounds = [e for e in handle.events()
                  if e["event_type"] == "debug_round"]
        _check(len(rounds) == min(n, 15),
               f"drill {n} logged {len(rounds)} repair rounds")
        runs.append(run_id)
    return runs


SCENARIOS: tuple[tuple[str, Callable], ...] = (
    ("demo", record_demo),
    ("review-cycle", record_review_cycle),
    ("repair-drills", record_repair_drills),
)


def build_corpus(corpus_dir=None, homes_base=None,
                 log: Optional[Callable[[str], None]] = None) -> dict:
    """Regenerate every reply fixture; returns a per-scenario run summary."""
    corpus = Path(corpus_dir) if corpus_dir else bundled_corpus_dir()
    corpus.mkdir(parents=True, exist_ok=True)
    for stale in corpus.glob("*.json"):
        stale.unlink()

    summary: dict = {"corpus_dir": str(corpus), "scenarios": {}}
    with tempfile.TemporaryDirectory(prefix="corpus-homes-") as tmp:
        base = Path(homes_base) if homes_base else Path(tmp)
        for name, scenario in SCENARIOS:
            if log:
                log(f"recording scenario {name}")
            runs = scenario(base / name, corpus)
            summary["scenarios"][name] = runs
    summary["fixtures"] = len(list(corpus.glob("*.json")))
    if log:
        log(f"{summary['fixtures']} fixtures in {corpus}")
    return summary
