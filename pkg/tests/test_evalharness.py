"""Rubric scoring harness: suite loading, aggregation, classification, report."""

import csv
import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from climalab.evalharness import (
    EvalStore,
    IncompleteScores,
    MissingScorecards,
    OutOfRange,
    ParseError,
    ReviewerScore,
    TaskSpec,
    UnknownLevel,
    UnknownTask,
    bundled_suite_path,
    classify,
    default_store,
    load_suite,
)


def small_suite():
    return [
        TaskSpec("t1", "L1", "climatology comparison", "Precipitation"),
        TaskSpec("t2", "L2", "sensitivity estimate", "ECS"),
    ]


def fill(store, task_id, planning, coding, synthesis, reviewer="r1"):
    store.record_score(ReviewerScore(task_id, reviewer, "planning", planning))
    store.record_score(ReviewerScore(task_id, reviewer, "coding", coding))
    store.record_score(ReviewerScore(task_id, reviewer, "synthesis", synthesis))


# -- suite loading -----------------------------------------------------------


def test_bundled_suite_level_counts():
    tasks = load_suite(bundled_suite_path())
    assert len(tasks) == 36
    counts = {}
    for t in tasks:
        counts[t.level] = counts.get(t.level, 0) + 1
    assert counts == {"L1": 23, "L2": 6, "L3": 6, "L4": 1}
    assert len({t.task_id for t in tasks}) == 36


def test_empty_suite_file_is_empty_not_error(tmp_path):
    path = tmp_path / "suite.jsonl"
    path.write_text("", encoding="utf-8")
    assert load_suite(path) == []


def test_unknown_level_rejected(tmp_path):
    path = tmp_path / "suite.jsonl"
    row = {"task_id": "x", "level": "L9", "description": "d", "variable": "v"}
    path.write_text(json.dumps(row) + "\n", encoding="utf-8")
    with pytest.raises(UnknownLevel):
        load_suite(path)


def test_bad_json_names_row(tmp_path):
    path = tmp_path / "suite.jsonl"
    good = {"task_id": "x", "level": "L1", "description": "d", "variable": "v"}
    path.write_text(json.dumps(good) + "\n{broken\n", encoding="utf-8")
    with pytest.raises(ParseError, match="row 2"):
        load_suite(path)


def test_missing_field_rejected(tmp_path):
    path = tmp_path / "suite.jsonl"
    path.write_text('{"task_id": "x", "level": "L1"}\n', encoding="utf-8")
    with pytest.raises(ParseError, match="missing"):
        load_suite(path)


def test_duplicate_task_id_rejected(tmp_path):
    path = tmp_path / "suite.jsonl"
    row = {"task_id": "x", "level": "L1", "description": "d", "variable": "v"}
    path.write_text(json.dumps(row) + "\n" + json.dumps(row) + "\n",
                    encoding="utf-8")
    with pytest.raises(ParseError, match="duplicate"):
        load_suite(path)


# -- classification ----------------------------------------------------------


def test_classify_paper_thresholds():
    assert classify(4.2) == "expert_level"
    assert classify(4.0) == "research_ready"
    assert classify(1.9) == "deficient"


def test_classify_boundaries():
    assert classify(5) == "expert_level"
    assert classify(Fraction(5, 2)) == "research_ready"
    assert classify(2.2) == "gap"
    assert classify(2) == "gap"
    assert classify(1) == "deficient"


def test_classify_rejects_out_of_domain():
    with pytest.raises(ValueError):
        classify(0.5)
    with pytest.raises(ValueError):
        classify(5.01)


@given(st.fractions(min_value=1, max_value=5))
def test_classify_partitions_the_interval(score):
    bucket = classify(score)
    expected = (
        "expert_level" if score > 4
        else "research_ready" if score >= Fraction(5, 2)
        else "gap" if score >= 2
        else "deficient"
    )
    assert bucket == expected


# -- score recording ---------------------------------------------------------


def test_record_and_upsert():
    store = EvalStore(small_suite())
    store.record_score(ReviewerScore("t1", "r1", "planning", 3))
    store.record_score(ReviewerScore("t1", "r1", "planning", 5))
    assert store.scores_for("t1") == [ReviewerScore("t1", "r1", "planning", 5)]


def test_out_of_range_values_rejected():
    store = EvalStore(small_suite())
    for bad in (0, 6, -1):
        with pytest.raises(OutOfRange):
            store.record_score(ReviewerScore("t1", "r1", "planning", bad))


def test_unknown_task_rejected():
    store = EvalStore(small_suite())
    with pytest.raises(UnknownTask):
        store.record_score(ReviewerScore("ghost", "r1", "planning", 3))


def test_unknown_dimension_rejected():
    store = EvalStore(small_suite())
    with pytest.raises(ParseError):
        store.record_score(ReviewerScore("t1", "r1", "style", 3))


# -- aggregation -------------------------------------------------------------


def test_three_reviewers_average_to_four():
    store = EvalStore(small_suite())
    for reviewer, value in (("r1", 5), ("r2", 4), ("r3", 3)):
        fill(store, "t1", value, value, value, reviewer=reviewer)
    card = store.aggregate_scorecard("t1")
    assert card.composite == Fraction(4)
    assert card.classification == "research_ready"
    assert card.formatted()["composite"] == "4.00"


def test_single_reviewer_dimension_mix():
    store = EvalStore(small_suite())
    fill(store, "t1", 5, 4, 3)
    card = store.aggregate_scorecard("t1")
    assert card.dimension_means == {
        "planning": Fraction(5), "coding": Fraction(4), "synthesis": Fraction(3),
    }
    assert card.composite == Fraction(4)


def test_missing_dimension_is_incomplete():
    store = EvalStore(small_suite())
    store.record_score(ReviewerScore("t1", "r1", "planning", 5))
    store.record_score(ReviewerScore("t1", "r1", "synthesis", 4))
    with pytest.raises(IncompleteScores) as exc_info:
        store.aggregate_scorecard("t1")
    assert "r1:coding" in exc_info.value.details["missing"]


def test_unscored_task_is_incomplete():
    store = EvalStore(small_suite())
    with pytest.raises(IncompleteScores):
        store.aggregate_scorecard("t1")


def test_aggregation_is_exact_for_thirds():
    store = EvalStore(small_suite())
    fill(store, "t1", 1, 1, 2, reviewer="r1")
    fill(store, "t1", 1, 1, 2, reviewer="r2")
    fill(store, "t1", 2, 1, 2, reviewer="r3")
    card = store.aggregate_scorecard("t1")
    assert card.dimension_means["planning"] == Fraction(4, 3)
    assert card.composite == Fraction(4 + 3 + 6, 9)


@settings(max_examples=50)
@given(
    st.lists(
        st.tuples(
            st.sampled_from(["r1", "r2", "r3", "r4", "r5"]),
            st.integers(1, 5), st.integers(1, 5), st.integers(1, 5),
        ),
        min_size=1, max_size=5, unique_by=lambda t: t[0],
    ),
    st.randoms(),
)
def test_aggregation_matches_oracle_any_order(rows, rng):
    """Reviewer-permutation invariance against a brute-force rational oracle."""
    triples = [
        ReviewerScore("t1", reviewer, dim, value)
        for reviewer, p, c, s in rows
        for dim, value in (("planning", p), ("coding", c), ("synthesis", s))
    ]
    rng.shuffle(triples)
    store = EvalStore(small_suite())
    for s in triples:
        store.record_score(s)
    card = store.aggregate_scorecard("t1")

    expected_means = {
        dim: Fraction(sum(vals[i] for _, *vals in rows), len(rows))
        for i, dim in enumerate(("planning", "coding", "synthesis"))
    }
    assert card.dimension_means == expected_means
    assert card.composite == sum(expected_means.values(), Fraction(0)) / 3
    assert Fraction(1) <= card.composite <= Fraction(5)


# -- suite report ------------------------------------------------------------


def test_bundled_demonstration_report():
    report = default_store().suite_report()
    assert report["total_tasks"] == 36
    assert report["level_counts"] == {
        "L1": 23, "L2": 6, "L3": 6, "L4": 1, "L5": 0,
    }
    assert report["at_or_above_threshold"] == 16
    assert report["headline"].startswith("16 of 36")
    assert report["dimension_ranking"] == ["planning", "coding", "synthesis"]
    means = {d: float(v) for d, v in report["dimension_means"].items()}
    assert means["planning"] > means["coding"] > means["synthesis"]
    assert report["classification_counts"]["expert_level"] == 16
    assert report["classification_counts"]["deficient"] == 0
    assert sum(report["classification_counts"].values()) == 36


def test_report_requires_all_scorecards():
    store = EvalStore(small_suite())
    fill(store, "t1", 4, 4, 4)
    with pytest.raises(MissingScorecards) as exc_info:
        store.suite_report()
    assert exc_info.value.details["task_ids"] == ["t2"]


def test_report_on_empty_scores():
    store = EvalStore(small_suite())
    with pytest.raises(MissingScorecards):
        store.suite_report()


def test_report_is_reproducible_from_disk(tmp_path):
    scores_path = tmp_path / "scores.csv"
    store = default_store(scores_path=scores_path)
    fill(store, "task-36", 2, 2, 2, reviewer="reviewer_d")
    first = store.suite_report()
    reloaded = EvalStore(load_suite(bundled_suite_path()),
                         scores_path=scores_path)
    assert reloaded.suite_report() == first


def test_csv_import_validates_rows(tmp_path):
    path = tmp_path / "scores.csv"
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["task_id", "reviewer", "dimension", "value"])
        writer.writerow(["t1", "r1", "planning", "not-a-number"])
    store = EvalStore(small_suite())
    with pytest.raises(ParseError, match="row 2"):
        store.import_csv(path)


def test_csv_import_counts_rows(tmp_path):
    path = tmp_path / "scores.csv"
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["task_id", "reviewer", "dimension", "value"])
        for dim in ("planning", "coding", "synthesis"):
            writer.writerow(["t1", "r1", dim, 4])
    store = EvalStore(small_suite())
    assert store.import_csv(path) == 3
    assert store.aggregate_scorecard("t1").composite == Fraction(4)
