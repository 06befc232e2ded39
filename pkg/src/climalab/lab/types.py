"""Value types flowing through the lab pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from climalab.planner import DiagnosticTask

ARTIFACT_SOURCES = ("template_adapted", "generated")
EXECUTION_STATUSES = ("ok", "error", "timeout")


@dataclass(frozen=True)
class ToolInvocation:
    """One compiled preprocessing step: a tool plus fully bound parameters."""

    tool: str
    entrypoint: str
    params: dict
    step_index: int


@dataclass(frozen=True)
class CodeArtifact:
    task_id: str
    script_text: str
    runtime_tag: str = "python3"
    source: str = "generated"
    revision: int = 0

    def __post_init__(self):
        if self.source not in ARTIFACT_SOURCES:
            raise ValueError(f"unknown artifact source {self.source!r}")
        if self.revision < 0:
            raise ValueError("revision must be >= 0")

    def revised(self, script_text: str) -> "CodeArtifact":
        """Revisions only ever come from the debug loop, one step at a time."""
        return replace(self, script_text=script_text, revision=self.revision + 1)


@dataclass(frozen=True)
class ExecutionResult:
    status: str
    exit_code: int
    stdout: str
    stderr: str
    produced_files: tuple = ()
    result_manifest: Optional[dict] = None
    duration_s: float = 0.0

    def __post_init__(self):
        if self.status not in EXECUTION_STATUSES:
            raise ValueError(f"unknown execution status {self.status!r}")
        if self.status == "ok" and self.result_manifest is None:
            raise ValueError("ok results must carry a parsed manifest")


@dataclass(frozen=True)
class ValidationVerdict:
    validator: str  # "data" | "figure"
    passed: bool
    findings: tuple = ()  # of (check_id, message), failures only

    def __post_init__(self):
        if self.passed and self.findings:
            raise ValueError("a passing verdict cannot carry failure findings")


@dataclass(frozen=True)
class DebugRound:
    round_no: int
    error_excerpt: str
    revision: int


@dataclass
class DebugTranscript:
    task_id: str
    cap: int
    rounds: list = field(default_factory=list)

    def append(self, error_excerpt: str, revision: int):
        if len(self.rounds) >= self.cap:
            raise ValueError(f"debug transcript already at cap {self.cap}")
        self.rounds.append(DebugRound(len(self.rounds) + 1, error_excerpt,
                                      revision))

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "cap": self.cap,
            "rounds": [
                {
                    "round": r.round_no,
                    "error_excerpt": r.error_excerpt,
                    "revision": r.revision,
                }
                for r in self.rounds
            ],
        }


@dataclass
class TaskGraph:
    nodes: dict  # task_id -> DiagnosticTask
    deps: dict  # task_id -> tuple of dependency ids

    def order(self) -> list[str]:
        """Deterministic topological order (insertion order among peers)."""
        from graphlib import TopologicalSorter

        return list(TopologicalSorter(
            {tid: list(self.deps[tid]) for tid in self.nodes}
        ).static_order())

    def task(self, task_id: str) -> DiagnosticTask:
        return self.nodes[task_id]


@dataclass
class TaskOutcome:
    task_id: str
    status: str  # "ok" | "failed" | "skipped"
    artifact: Optional[CodeArtifact] = None
    result: Optional[ExecutionResult] = None
    verdicts: tuple = ()
    transcript: Optional[DebugTranscript] = None
    error: str = ""
    workspace: str = ""  # run_dir-relative


@dataclass
class RunResults:
    outcomes: dict  # task_id -> TaskOutcome
    order: list
    figures: list = field(default_factory=list)  # (task_id, path, sidecar)
    statistics: dict = field(default_factory=dict)  # task_id -> manifest stats

    @property
    def ok(self) -> bool:
        return all(o.status == "ok" for o in self.outcomes.values())

    def failed_tasks(self) -> list[str]:
        return [tid for tid in self.order
                if self.outcomes[tid].status == "failed"]
