"""Plan wire schema, version 1.

A plan is a JSON document the model emits, the reviewer edits, and the lab
executes. Everything downstream hangs off this shape, so it is pydantic-
validated at every boundary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from graphlib import CycleError, TopologicalSorter
from typing import Optional

from pydantic import BaseModel, Field, field_validator, model_validator

SCHEMA_VERSION = 1

STATISTICS = ("mean", "variance", "anomaly")
STEP_KINDS = ("regrid", "convert_units", "subset", "statistic")


class UserQuery(BaseModel):
    text: str
    attached_documents: list[dict] = Field(default_factory=list)

    @field_validator("text")
    @classmethod
    def _non_empty(cls, v: str) -> str:
        if not v.strip():
            raise ValueError("query text must be non-empty")
        return v


class DatasetSelector(BaseModel):
    """Catalog facet filter plus the alias diagnostics use to reference it."""

    alias: str
    activity: Optional[str] = None
    experiment: Optional[str] = None
    source_model: Optional[str] = None
    ensemble_member: Optional[str] = None
    variable: Optional[str] = None
    frequency: Optional[str] = None

    @model_validator(mode="after")
    def _at_least_one_facet(self):
        facets = (
            self.activity, self.experiment, self.source_model,
            self.ensemble_member, self.variable, self.frequency,
        )
        if all(f is None for f in facets):
            raise ValueError(f"selector {self.alias!r} sets no facets")
        return self

    def facets(self) -> dict:
        out = {}
        for name in ("activity", "experiment", "source_model",
                     "ensemble_member", "variable", "frequency"):
            value = getattr(self, name)
            if value is not None:
                out[name] = value
        return out


class PreprocessingStep(BaseModel):
    kind: str
    params: dict = Field(default_factory=dict)

    @field_validator("kind")
    @classmethod
    def _known_kind(cls, v: str) -> str:
        if v not in STEP_KINDS:
            raise ValueError(f"unknown preprocessing kind {v!r}")
        return v


class DiagnosticTask(BaseModel):
    id: str
    description: str
    method: str
    inputs: list[str] = Field(default_factory=list)
    outputs: list[str] = Field(default_factory=list)
    depends_on: list[str] = Field(default_factory=list)

    @field_validator("id")
    @classmethod
    def _id_non_empty(cls, v: str) -> str:
        if not v.strip():
            raise ValueError("task id must be non-empty")
        return v


class FigureSpec(BaseModel):
    name: str
    kind: str = "auto"
    title: str = ""


class Plan(BaseModel):
    schema_version: int = SCHEMA_VERSION
    objective: str
    datasets: list[DatasetSelector] = Field(default_factory=list)
    preprocessing: list[PreprocessingStep] = Field(default_factory=list)
    diagnostics: list[DiagnosticTask] = Field(default_factory=list)
    visualizations: list[FigureSpec] = Field(default_factory=list)
    deliverables: list[str] = Field(default_factory=list)

    @field_validator("schema_version")
    @classmethod
    def _version(cls, v: int) -> int:
        if v != SCHEMA_VERSION:
            raise ValueError(f"unsupported plan schema version {v}")
        return v


class ReviewDecision(BaseModel):
    reviewer: str = "operator"
    approved: bool
    edits: Optional[dict] = None
    comment: str = ""
    run_ref: str = ""


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


def canonical_plan_json(plan: Plan) -> str:
    return json.dumps(plan.model_dump(mode="json"), sort_keys=True)


def find_violations(plan: Plan, catalog=None) -> list[Violation]:
    """Structural plan invariants plus (when a catalog is given) resolvability."""
    out: list[Violation] = []
    if not plan.objective.strip():
        out.append(Violation("EmptyObjective", "plan objective is empty"))

    aliases = [d.alias for d in plan.datasets]
    for alias in sorted({a for a in aliases if aliases.count(a) > 1}):
        out.append(Violation("DuplicateAlias", f"dataset alias {alias!r} repeated"))

    ids = [t.id for t in plan.diagnostics]
    for tid in sorted({i for i in ids if ids.count(i) > 1}):
        out.append(Violation("DuplicateTaskId", f"task id {tid!r} repeated"))

    known_ids = set(ids)
    known_aliases = set(aliases)
    for task in plan.diagnostics:
        for dep in task.depends_on:
            if dep not in known_ids:
                out.append(
                    Violation(
                        "UnknownDependency",
                        f"task {task.id!r} depends on unknown task {dep!r}",
                    )
                )
        for ref in task.inputs:
            if ref.startswith("dataset:"):
                if ref.split(":", 1)[1] not in known_aliases:
                    out.append(
                        Violation(
                            "UnknownInputReference",
                            f"task {task.id!r} reads undeclared {ref!r}",
                        )
                    )
            elif ref.startswith("task:"):
                if ref.split(":", 2)[1] not in known_ids:
                    out.append(
                        Violation(
                            "UnknownInputReference",
                            f"task {task.id!r} reads unknown {ref!r}",
                        )
                    )
            else:
                out.append(
                    Violation(
                        "UnknownInputReference",
                        f"task {task.id!r} input {ref!r} must start with "
                        "'dataset:' or 'task:'",
                    )
                )

    graph = {t.id: set(t.depends_on) & known_ids for t in plan.diagnostics}
    try:
        TopologicalSorter(graph).prepare()
    except CycleError as exc:
        out.append(Violation("DependencyCycle", f"dependency cycle: {exc.args[1]}"))

    for step in plan.preprocessing:
        if step.kind == "statistic":
            stat = step.params.get("statistic")
            if stat not in STATISTICS:
                out.append(
                    Violation(
                        "UnknownStatistic",
                        f"statistic {stat!r} not in {STATISTICS}",
                    )
                )

    if catalog is not None:
        from climalab.catalog import CatalogQuery

        for selector in plan.datasets:
            rows = catalog.query_datasets(CatalogQuery(**selector.facets()))
            if not rows:
                out.append(
                    Violation(
                        "UnresolvableDataset",
                        f"selector {selector.alias!r} matches no catalog rows",
                    )
                )
    return out
