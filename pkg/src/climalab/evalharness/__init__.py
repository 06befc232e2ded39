"""Task suite, rubric scores, aggregation, and suite-level reporting."""

from climalab.evalharness.core import (
    CLASSIFICATIONS,
    DIMENSIONS,
    LEVELS,
    EvalStore,
    IncompleteScores,
    MissingScorecards,
    OutOfRange,
    ParseError,
    ReviewerScore,
    Scorecard,
    TaskSpec,
    UnknownLevel,
    UnknownTask,
    bundled_scores_path,
    bundled_suite_path,
    classify,
    default_store,
    load_suite,
    suite_report,
)

__all__ = [
    "CLASSIFICATIONS",
    "DIMENSIONS",
    "LEVELS",
    "EvalStore",
    "IncompleteScores",
    "MissingScorecards",
    "OutOfRange",
    "ParseError",
    "ReviewerScore",
    "Scorecard",
    "TaskSpec",
    "UnknownLevel",
    "UnknownTask",
    "bundled_scores_path",
    "bundled_suite_path",
    "classify",
    "default_store",
    "load_suite",
    "suite_report",
]
