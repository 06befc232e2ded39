"""Prompt builders for the planning agents.

Prompts are pure functions of run-independent content: no paths, ids, or
timestamps may appear, or mock-fixture keys would never replay. The first
line of each user message is a task tag a scripted backend can dispatch on.
"""

from __future__ import annotations

from climalab.catalog import Catalog

SUMMARIZE_SYSTEM = (
    "You are the requirements analyst of a climate-analysis platform. "
    "Condense the user's request into one short paragraph naming the "
    "variables, experiments, time periods, and comparison targets involved."
)

CANDIDATE_SYSTEM = (
    "You are the planning agent of a climate-analysis platform. Respond with "
    "a single JSON plan document (schema version 1) inside a ```json fence. "
    "Fields: objective, datasets (alias + catalog facets), preprocessing, "
    "diagnostics (id, description, method, inputs, outputs, depends_on), "
    "visualizations, deliverables. Use only datasets present in the catalog."
)

MERGE_SYSTEM = (
    "You are the plan summary agent. Merge the candidate plans into one "
    "coherent plan, deduplicating diagnostics by id. Respond with a single "
    "JSON plan document inside a ```json fence."
)


def catalog_digest(catalog: Catalog) -> str:
    """Compact, deterministic inventory the planner grounds plans in."""
    lines = []
    seen = set()
    for d in catalog.all():
        key = (d.activity, d.experiment, d.variable, d.units, d.frequency,
               d.time_range)
        if key in seen:
            continue
        seen.add(key)
        models = sorted(
            {
                r.source_model
                for r in catalog.all()
                if (r.activity, r.experiment, r.variable, r.frequency) ==
                   (d.activity, d.experiment, d.variable, d.frequency)
            }
        )
        lines.append(
            "- %s/%s %s [%s] %s %d-%d models: %s"
            % (
                d.activity,
                d.experiment,
                d.variable,
                d.units,
                d.frequency,
                d.time_range[0],
                d.time_range[1],
                ", ".join(models),
            )
        )
    return "\n".join(sorted(lines))


def render_context(plans: list, templates: list, web_blocks: list) -> str:
    """Retrieved-context section; record summaries only, never ids or paths."""
    parts = []
    if plans:
        parts.append("prior validated plans:")
        parts.extend(f"  * {summary}" for summary in plans)
    if templates:
        parts.append("available algorithm templates:")
        parts.extend(f"  * {summary}" for summary in templates)
    if web_blocks:
        parts.append("web context:")
        for block in web_blocks:
            parts.append(f"  * {block.get('title', '')}: {block.get('body', '')}")
    return "\n".join(parts) if parts else "(no retrieved context)"


def summarize_user(text: str, documents: list[dict]) -> str:
    lines = ["[summarize-requirements]", f"query: {text}"]
    for doc in documents:
        lines.append(f"document {doc.get('title', 'untitled')}:")
        lines.append(doc.get("body", ""))
    return "\n".join(lines)


def candidate_user(summary: str, digest: str, context: str,
                   review_comment: str = "", attempt_note: str = "") -> str:
    lines = ["[generate-candidate-plan]", f"requirements: {summary}"]
    if review_comment:
        lines.append(f"reviewer comment: {review_comment}")
    if attempt_note:
        lines.append(f"previous attempt invalid: {attempt_note}")
    lines.append("catalog:")
    lines.append(digest)
    lines.append("context:")
    lines.append(context)
    return "\n".join(lines)


def merge_user(plan_jsons: list[str]) -> str:
    lines = ["[merge-plans]"]
    for i, doc in enumerate(plan_jsons, start=1):
        lines.append(f"candidate {i}:")
        lines.append(doc)
    return "\n".join(lines)
