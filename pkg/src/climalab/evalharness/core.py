"""Rubric scoring: task suite, reviewer scores, aggregation, classification.

Means are computed over exact rationals so reports are reproducible
bit-for-bit; floats only appear at the formatting boundary.
"""

from __future__ import annotations

import csv
import json
import threading
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Union

from climalab.errors import ClimalabError

LEVELS = ("L1", "L2", "L3", "L4", "L5")
DIMENSIONS = ("planning", "coding", "synthesis")
CLASSIFICATIONS = ("expert_level", "research_ready", "gap", "deficient")

Rational = Union[int, float, Fraction]


class ParseError(ClimalabError):
    http_status = 422


class UnknownLevel(ClimalabError):
    http_status = 422


class OutOfRange(ClimalabError):
    http_status = 422


class UnknownTask(ClimalabError):
    http_status = 404


class IncompleteScores(ClimalabError):
    http_status = 409


class MissingScorecards(ClimalabError):
    http_status = 409


@dataclass(frozen=True)
class TaskSpec:
    task_id: str
    level: str
    description: str
    variable: str


@dataclass(frozen=True)
class ReviewerScore:
    task_id: str
    reviewer: str
    dimension: str
    value: int


@dataclass(frozen=True)
class Scorecard:
    task_id: str
    dimension_means: dict  # dimension -> Fraction
    composite: Fraction
    classification: str

    def formatted(self) -> dict:
        """Two-decimal rendering for reports; exact values stay internal."""
        return {
            "task_id": self.task_id,
            "dimensions": {
                d: f"{float(m):.2f}" for d, m in self.dimension_means.items()
            },
            "composite": f"{float(self.composite):.2f}",
            "classification": self.classification,
        }


def bundled_suite_path() -> Path:
    return Path(str(resources.files("climalab.fixtures") / "data" / "suite.jsonl"))


def bundled_scores_path() -> Path:
    return Path(
        str(resources.files("climalab.fixtures") / "data" / "demo_scores.csv")
    )


def load_suite(path) -> list[TaskSpec]:
    path = Path(path)
    tasks: list[TaskSpec] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for row, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"suite row {row}: invalid JSON: {exc}") from exc
            missing = [k for k in ("task_id", "level", "description", "variable")
                       if k not in doc]
            if missing:
                raise ParseError(f"suite row {row}: missing {missing}")
            if doc["level"] not in LEVELS:
                raise UnknownLevel(
                    f"suite row {row}: level {doc['level']!r} not in {LEVELS}"
                )
            if doc["task_id"] in seen:
                raise ParseError(f"suite row {row}: duplicate id {doc['task_id']!r}")
            seen.add(doc["task_id"])
            tasks.append(TaskSpec(doc["task_id"], doc["level"],
                                  doc["description"], doc["variable"]))
    return tasks


def classify(composite: Rational) -> str:
    """Bucket a composite score.

    The (4, 5] / [2.5, 4] / [2, 2.5) / [1, 2) buckets partition [1, 5]; the
    [2, 2.5) interval is reported as an explicit "gap" rather than folded
    into a neighbor. Boundaries: 4.0 and 2.5 both read as research_ready.
    """
    score = Fraction(composite)
    if not Fraction(1) <= score <= Fraction(5):
        raise ValueError(f"composite {composite!r} outside [1, 5]")
    if score > 4:
        return "expert_level"
    if score >= Fraction(5, 2):
        return "research_ready"
    if score >= 2:
        return "gap"
    return "deficient"


class EvalStore:
    """Suite plus reviewer scores, upserted per (task, reviewer, dimension).

    When scores_path is set, every upsert rewrites the CSV so the on-disk
    copy always matches the snapshot a concurrent report would read.
    """

    def __init__(self, suite: list[TaskSpec], scores_path=None):
        self.suite = list(suite)
        self.by_id = {t.task_id: t for t in self.suite}
        self.scores_path = Path(scores_path) if scores_path else None
        self._scores: dict[tuple, int] = {}
        self._lock = threading.RLock()
        if self.scores_path and self.scores_path.is_file():
            self.import_csv(self.scores_path, persist=False)

    def record_score(self, score: ReviewerScore, persist: bool = True):
        if score.task_id not in self.by_id:
            raise UnknownTask(f"no suite task {score.task_id!r}")
        if score.dimension not in DIMENSIONS:
            raise ParseError(
                f"dimension {score.dimension!r} not in {DIMENSIONS}"
            )
        if not isinstance(score.value, int) or not 1 <= score.value <= 5:
            raise OutOfRange(f"score {score.value!r} outside 1..5")
        with self._lock:
            self._scores[(score.task_id, score.reviewer, score.dimension)] = (
                score.value
            )
            if persist and self.scores_path:
                self._persist()

    def import_csv(self, path, persist: bool = True) -> int:
        count = 0
        with Path(path).open(encoding="utf-8", newline="") as fh:
            for row_num, row in enumerate(csv.reader(fh), start=1):
                if not row or (row_num == 1 and row[0] == "task_id"):
                    continue
                if len(row) != 4:
                    raise ParseError(f"scores row {row_num}: expected 4 columns")
                task_id, reviewer, dimension, raw = [c.strip() for c in row]
                try:
                    value = int(raw)
                except ValueError as exc:
                    raise ParseError(
                        f"scores row {row_num}: bad value {raw!r}"
                    ) from exc
                self.record_score(
                    ReviewerScore(task_id, reviewer, dimension, value),
                    persist=False,
                )
                count += 1
        if persist and self.scores_path:
            with self._lock:
                self._persist()
        return count

    def _persist(self):
        self.scores_path.parent.mkdir(parents=True, exist_ok=True)
        with self.scores_path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["task_id", "reviewer", "dimension", "value"])
            for key in sorted(self._scores):
                writer.writerow([*key, self._scores[key]])

    def scores_for(self, task_id: str) -> list[ReviewerScore]:
        with self._lock:
            return [
                ReviewerScore(*key, value)
                for key, value in sorted(self._scores.items())
                if key[0] == task_id
            ]

    def aggregate_scorecard(self, task_id: str) -> Scorecard:
        if task_id not in self.by_id:
            raise UnknownTask(f"no suite task {task_id!r}")
        scores = self.scores_for(task_id)
        by_reviewer: dict[str, dict[str, int]] = {}
        for s in scores:
            by_reviewer.setdefault(s.reviewer, {})[s.dimension] = s.value
        missing = [
            f"{reviewer}:{dim}"
            for reviewer, dims in sorted(by_reviewer.items())
            for dim in DIMENSIONS
            if dim not in dims
        ]
        if not by_reviewer:
            missing = [f"*:{dim}" for dim in DIMENSIONS]
        if missing:
            raise IncompleteScores(
                f"task {task_id}: unscored {missing}", missing=missing
            )
        means = {
            dim: Fraction(
                sum(dims[dim] for dims in by_reviewer.values()),
                len(by_reviewer),
            )
            for dim in DIMENSIONS
        }
        composite = sum(means.values(), Fraction(0)) / len(DIMENSIONS)
        return Scorecard(task_id, means, composite, classify(composite))

    def all_scorecards(self) -> dict[str, Scorecard]:
        cards = {}
        unscored = []
        for task in self.suite:
            try:
                cards[task.task_id] = self.aggregate_scorecard(task.task_id)
            except IncompleteScores:
                unscored.append(task.task_id)
        if unscored:
            raise MissingScorecards(
                f"{len(unscored)} suite tasks lack complete scores",
                task_ids=unscored,
            )
        return cards

    def suite_report(self) -> dict:
        return suite_report(self.suite, self.all_scorecards())


def suite_report(suite: Iterable[TaskSpec], scorecards: dict) -> dict:
    suite = list(suite)
    missing = [t.task_id for t in suite if t.task_id not in scorecards]
    if not suite or missing:
        raise MissingScorecards(
            "scorecards required for every suite task", task_ids=missing
        )
    level_counts = {level: 0 for level in LEVELS}
    for task in suite:
        level_counts[task.level] += 1

    threshold = Fraction(4)
    at_or_above = sorted(
        t.task_id for t in suite if scorecards[t.task_id].composite >= threshold
    )
    dim_totals = {
        dim: sum(
            (scorecards[t.task_id].dimension_means[dim] for t in suite),
            Fraction(0),
        ) / len(suite)
        for dim in DIMENSIONS
    }
    ranking = sorted(DIMENSIONS, key=lambda d: (-dim_totals[d], d))
    class_counts = {c: 0 for c in CLASSIFICATIONS}
    for t in suite:
        class_counts[scorecards[t.task_id].classification] += 1

    return {
        "total_tasks": len(suite),
        "level_counts": level_counts,
        "at_or_above_threshold": len(at_or_above),
        "threshold": "4.00",
        "headline": (
            f"{len(at_or_above)} of {len(suite)} tasks scored a composite "
            "of 4.00 or higher"
        ),
        "tasks_at_or_above": at_or_above,
        "dimension_means": {d: f"{float(m):.2f}" for d, m in dim_totals.items()},
        "dimension_ranking": ranking,
        "classification_counts": class_counts,
        "scorecards": {
            tid: scorecards[tid].formatted() for tid in sorted(scorecards)
        },
        "legend": (
            "composite > 4 reads expert_level; 2.5..4 inclusive reads "
            "research_ready; 2..2.5 is reported as an explicit gap bucket; "
            "below 2 reads deficient"
        ),
    }


def default_store(suite_path: Optional[str] = None,
                  scores_path: Optional[str] = None) -> EvalStore:
    suite = load_suite(suite_path or bundled_suite_path())
    store = EvalStore(suite, scores_path=scores_path)
    if not store._scores:
        store.import_csv(bundled_scores_path(), persist=False)
    return store
