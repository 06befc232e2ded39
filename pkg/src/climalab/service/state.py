"""Run lifecycle state machine, reconstructed by replaying the event log."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from climalab.errors import ClimalabError

STAGES = (
    "created", "planning", "awaiting_review", "executing",
    "validating", "synthesizing", "completed", "failed", "cancelled",
)

TERMINAL = frozenset({"completed", "failed", "cancelled"})
ACTIVE = frozenset(STAGES) - TERMINAL

# Forward progress plus the review rejection loop; failure and cancellation
# are reachable from any active stage, terminal stages have no way out.
TRANSITIONS = {
    "created": frozenset({"planning", "failed", "cancelled"}),
    "planning": frozenset({"awaiting_review", "failed", "cancelled"}),
    "awaiting_review": frozenset({"executing", "planning", "failed",
                                  "cancelled"}),
    "executing": frozenset({"validating", "failed", "cancelled"}),
    "validating": frozenset({"synthesizing", "failed", "cancelled"}),
    "synthesizing": frozenset({"completed", "failed", "cancelled"}),
    "completed": frozenset(),
    "failed": frozenset(),
    "cancelled": frozenset(),
}


class StateMachineViolation(ClimalabError):
    http_status = 500


class WrongStage(ClimalabError):
    http_status = 409


def check_transition(current: str, target: str):
    if target not in TRANSITIONS.get(current, frozenset()):
        raise StateMachineViolation(
            f"illegal transition {current} -> {target}"
        )


@dataclass
class RunState:
    """Snapshot derived purely from events; holds no authority of its own."""

    run_id: str = ""
    stage: str = "created"
    failed_stage: str = ""
    error: str = ""
    query: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)
    has_plan: bool = False
    has_report: bool = False
    has_committee: bool = False
    review_comment: str = ""
    last_seq: int = 0
    created_at: float = 0.0
    updated_at: float = 0.0
    # task id -> pending|running|debugging|validated|failed|skipped
    tasks: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)

    def apply(self, event: dict):
        seq = event["seq"]
        if seq != self.last_seq + 1:
            raise StateMachineViolation(
                f"event seq {seq} after {self.last_seq}: log has a gap"
            )
        self.last_seq = seq
        self.updated_at = event["ts"]
        etype = event["event_type"]
        payload = event.get("payload", {})

        if etype == "run_created":
            self.run_id = payload.get("run_id", self.run_id)
            self.query = payload.get("query", {})
            self.options = payload.get("options", {})
            self.created_at = event["ts"]
        elif etype == "stage_changed":
            source, target = payload["from"], payload["to"]
            if source != self.stage:
                raise StateMachineViolation(
                    f"stage_changed from {source} but run is at {self.stage}"
                )
            check_transition(source, target)
            self.stage = target
            if target == "failed":
                self.failed_stage = payload.get("failed_stage", source)
                self.error = payload.get("error", "")
        elif etype == "plan_proposed":
            self.has_plan = True
        elif etype == "review_submitted":
            if not payload.get("approved", False):
                self.review_comment = payload.get("comment", "")
        elif etype == "task_started":
            self.tasks[payload["task"]] = "running"
        elif etype == "debug_round":
            self.tasks[payload["task"]] = f"debugging round {payload['round']}"
        elif etype == "task_validated":
            self.tasks[payload["task"]] = "validated"
        elif etype == "task_failed":
            self.tasks[payload["task"]] = "failed"
        elif etype == "task_skipped":
            self.tasks[payload["task"]] = "skipped"
        elif etype == "report_ready":
            self.has_report = True
        elif etype == "committee_ready":
            self.has_committee = True
        elif etype == "verdict_submitted":
            self.verdicts[payload["task"]] = {
                "approved": payload.get("approved", False),
                "template_id": payload.get("template_id", ""),
            }

    def snapshot(self) -> dict:
        return {
            "run_id": self.run_id,
            "stage": self.stage,
            "failed_stage": self.failed_stage,
            "error": self.error,
            "query": self.query,
            "options": self.options,
            "has_plan": self.has_plan,
            "has_report": self.has_report,
            "has_committee": self.has_committee,
            "last_seq": self.last_seq,
            "created_at": self.created_at,
            "updated_at": self.updated_at,
            "tasks": dict(self.tasks),
            "verdicts": dict(self.verdicts),
        }


def replay(events) -> RunState:
    state = RunState()
    for event in events:
        state.apply(event)
    return state
