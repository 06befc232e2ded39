"""Prompt builders for figure interpretation, report synthesis, committees.

Prompt content must be run-independent: workspace-relative figure paths,
sidecar metadata, task fields, and narratives only. Absolute paths, run
ids, and timestamps would break fixture replay.
"""

from __future__ import annotations

INTERPRET_SYSTEM = (
    "You are the analysis agent of a climate-analysis platform. You are "
    "given the metadata of one rendered figure together with its task "
    "context. Describe what the figure shows: key patterns, anomalies, and "
    "trends. Answer with a short narrative paragraph; optionally end with a "
    "'highlights:' section listing one feature per '- ' line."
)

REPORT_SYSTEM = (
    "You are the reporting agent of a climate-analysis platform. You are "
    "given per-task findings of a completed analysis run. Write a coherent "
    "overall interpretation that ties the findings back to the stated "
    "objective. Respond with the interpretation text only."
)

CHAIR_SYSTEM = (
    "You chair an expert committee assessing the impacts of a climate "
    "analysis. Choose which domain experts the topic requires. Respond "
    "with JSON: {\"domains\": [..]} naming exactly the requested number of "
    "distinct expert roles."
)

EXPERT_SYSTEM = (
    "You are one domain expert on a climate impact committee. Assess the "
    "reported findings strictly from your domain's perspective. Respond "
    "with JSON: {\"narrative\": str, \"orientation\": \"positive\" or "
    "\"negative\", \"confidence\": number in [0,1]}."
)

CHAIR_REPORT_SYSTEM = (
    "You chair an expert committee. Given every member's assessment, "
    "write the structured synthesis. Respond with JSON: {\"consensus\": "
    "[str], \"disagreements\": [str], \"uncertainties\": [str]}. Note "
    "where members with different orientations weigh the same finding "
    "differently. Do not compute or state a numeric sentiment."
)


def interpret_user(task, objective: str, figure_rel: str, meta: dict,
                   statistics=None) -> str:
    lines = [
        "[interpret-figure]",
        f"objective: {objective}",
        f"task: {task.id}",
        f"description: {task.description}",
        f"figure: {figure_rel}",
    ]
    for field in ("title", "xlabel", "ylabel", "units"):
        lines.append(f"{field}: {meta.get(field, '')}")
    if statistics:
        stats = "; ".join(f"{k}={statistics[k]}" for k in sorted(statistics))
        lines.append(f"statistics: {stats}")
    return "\n".join(lines)


def report_user(objective: str, sections) -> str:
    lines = ["[synthesize-report]", f"objective: {objective}"]
    for section in sections:
        lines.append(f"task {section.task_id}: {section.description}")
        if section.narrative:
            lines.append(f"  findings: {section.narrative[:400]}")
        if section.statistics:
            stats = "; ".join(
                f"{k}={section.statistics[k]}"
                for k in sorted(section.statistics)
            )
            lines.append(f"  statistics: {stats}")
    return "\n".join(lines)


def domains_user(topic: str, objective: str, overall: str, expert_count: int,
                 context_lines=(), attempt_note: str = "") -> str:
    lines = [
        "[committee-domains]",
        f"topic: {topic}",
        f"experts needed: {expert_count}",
        f"report objective: {objective}",
        f"overall assessment: {overall[:600]}",
    ]
    if context_lines:
        lines.append("library context:")
        lines.extend(f"  * {entry}" for entry in context_lines)
    if attempt_note:
        lines.append(f"previous attempt invalid: {attempt_note}")
    return "\n".join(lines)


def assessment_user(domain: str, topic: str, objective: str,
                    overall: str) -> str:
    return "\n".join([
        "[committee-assessment]",
        f"domain: {domain}",
        f"topic: {topic}",
        f"report objective: {objective}",
        f"overall assessment: {overall[:600]}",
    ])


def chair_report_user(topic: str, assessments,
                      attempt_note: str = "") -> str:
    lines = ["[committee-chair-report]", f"topic: {topic}"]
    for a in assessments:
        lines.append(
            f"{a.domain} ({a.orientation}, confidence {a.confidence:g}): "
            f"{a.narrative[:300]}"
        )
    if attempt_note:
        lines.append(f"previous attempt invalid: {attempt_note}")
    return "\n".join(lines)
