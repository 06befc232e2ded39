"""Diagnostics dependency graph construction."""

from __future__ import annotations

from graphlib import CycleError, TopologicalSorter

from climalab.errors import ClimalabError
from climalab.lab.types import TaskGraph


class CycleDetected(ClimalabError):
    http_status = 422


def build_task_graph(plan) -> TaskGraph:
    nodes = {}
    deps = {}
    for task in plan.diagnostics:
        if task.id in nodes:
            raise CycleDetected(f"task id {task.id!r} repeated")
        nodes[task.id] = task
        deps[task.id] = tuple(task.depends_on)
    for tid, dd in deps.items():
        for dep in dd:
            if dep not in nodes:
                raise CycleDetected(f"task {tid!r} depends on unknown {dep!r}")
    try:
        TopologicalSorter({t: list(d) for t, d in deps.items()}).prepare()
    except CycleError as exc:
        raise CycleDetected(f"dependency cycle: {exc.args[1]}") from exc
    return TaskGraph(nodes=nodes, deps=deps)
