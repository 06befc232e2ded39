"""Dependency-aware concurrent task scheduling.

Tasks communicate only through declared files, so outputs are bit-identical
for any worker count; the event sink receives start/finish markers that let
callers audit the ordering invariant (no task starts before every
dependency has validated).
"""

from __future__ import annotations

import threading
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from graphlib import TopologicalSorter

from climalab.lab.types import TaskGraph, TaskOutcome


def _noop_sink(event_type: str, payload: dict):
    return None


def schedule_run(graph: TaskGraph, run_task, worker_count: int = 2,
                 sink=_noop_sink) -> dict:
    """Execute every task in dependency order; returns task_id -> TaskOutcome.

    run_task(task) must return a TaskOutcome; exceptions it leaks are
    recorded as failed outcomes. Dependents of a non-ok task are skipped,
    independent branches still complete.
    """
    if worker_count < 1:
        raise ValueError("worker_count must be >= 1")

    outcomes: dict[str, TaskOutcome] = {}
    emit_lock = threading.Lock()

    def emit(event_type: str, payload: dict):
        with emit_lock:
            sink(event_type, payload)

    def run_wrapped(task) -> TaskOutcome:
        emit("task_started", {"task": task.id})
        try:
            return run_task(task)
        except Exception as exc:  # noqa: BLE001 - boundary: record, don't crash pool
            return TaskOutcome(task.id, "failed", error=str(exc))

    sorter = TopologicalSorter(
        {tid: list(deps) for tid, deps in graph.deps.items()}
    )
    sorter.prepare()
    futures = {}
    with ThreadPoolExecutor(max_workers=worker_count) as pool:
        while sorter.is_active():
            for tid in sorter.get_ready():
                task = graph.task(tid)
                blocked = [d for d in graph.deps[tid]
                           if outcomes[d].status != "ok"]
                if blocked:
                    outcomes[tid] = TaskOutcome(
                        tid, "skipped",
                        error="dependency not satisfied: " + ", ".join(blocked),
                    )
                    emit("task_skipped", {"task": tid, "blocked_on": blocked})
                    sorter.done(tid)
                else:
                    futures[pool.submit(run_wrapped, task)] = tid
            if not futures:
                continue
            finished, _ = wait(futures, return_when=FIRST_COMPLETED)
            for fut in finished:
                tid = futures.pop(fut)
                outcome = fut.result()
                outcomes[tid] = outcome
                if outcome.status == "ok":
                    emit("task_validated", {"task": tid})
                else:
                    emit("task_failed", {"task": tid, "error": outcome.error})
                sorter.done(tid)
    return outcomes
