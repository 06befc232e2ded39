"""Run orchestration service: event-sourced state, REST surface, runtime wiring."""

from climalab.service.api import MissingDocument, create_app
from climalab.service.orchestrator import Orchestrator, PlanningFailure, UnknownTask
from climalab.service.runtime import HomeNotInitialized, Runtime, build_app, build_runtime
from climalab.service.state import (
    ACTIVE,
    STAGES,
    TERMINAL,
    TRANSITIONS,
    RunState,
    StateMachineViolation,
    WrongStage,
    check_transition,
    replay,
)
from climalab.service.store import (
    PersistenceFailure,
    RunActive,
    RunHandle,
    RunStore,
    UnknownRun,
    export_archive,
)

__all__ = [
    "ACTIVE",
    "HomeNotInitialized",
    "MissingDocument",
    "Orchestrator",
    "PersistenceFailure",
    "PlanningFailure",
    "RunActive",
    "RunHandle",
    "RunState",
    "RunStore",
    "Runtime",
    "STAGES",
    "StateMachineViolation",
    "TERMINAL",
    "TRANSITIONS",
    "UnknownRun",
    "UnknownTask",
    "WrongStage",
    "build_app",
    "build_runtime",
    "check_transition",
    "create_app",
    "export_archive",
    "replay",
]
