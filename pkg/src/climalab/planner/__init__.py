"""Planning: requirement summaries, candidate plans, merge, review, validation."""

from climalab.planner.schema import (
    DatasetSelector,
    DiagnosticTask,
    FigureSpec,
    Plan,
    PreprocessingStep,
    ReviewDecision,
    UserQuery,
    Violation,
    canonical_plan_json,
    find_violations,
)
from climalab.planner.core import (
    MergeParseFailure,
    PatchInvariantViolation,
    Planner,
    PlanParseFailure,
    apply_review,
    extract_json,
)
from climalab.planner.fetcher import FixtureFetcher

FinalPlan = Plan
CandidatePlan = Plan

__all__ = [
    "CandidatePlan",
    "DatasetSelector",
    "DiagnosticTask",
    "FigureSpec",
    "FinalPlan",
    "FixtureFetcher",
    "MergeParseFailure",
    "PatchInvariantViolation",
    "Plan",
    "PlanParseFailure",
    "Planner",
    "PreprocessingStep",
    "ReviewDecision",
    "UserQuery",
    "Violation",
    "apply_review",
    "canonical_plan_json",
    "extract_json",
    "find_violations",
]
