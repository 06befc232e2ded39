"""Figure interpretation and unified report assembly."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from climalab.errors import ClimalabError


class MissingFigure(ClimalabError):
    http_status = 404


class MissingSidecar(ClimalabError):
    http_status = 404


class ReportStructureError(ClimalabError):
    http_status = 422


@dataclass(frozen=True)
class FigureInterpretation:
    task_id: str
    figure_path: str  # run-dir relative
    narrative: str
    highlighted_features: tuple = ()

    def __post_init__(self):
        if not self.narrative.strip():
            raise ValueError("interpretation narrative must be non-empty")

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "figure_path": self.figure_path,
            "narrative": self.narrative,
            "highlighted_features": list(self.highlighted_features),
        }


@dataclass(frozen=True)
class ReportSection:
    task_id: str
    description: str
    narrative: str
    figures: tuple = ()
    statistics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "description": self.description,
            "narrative": self.narrative,
            "figures": list(self.figures),
            "statistics": dict(self.statistics),
        }


@dataclass(frozen=True)
class UnifiedReport:
    objective: str
    sections: tuple
    overall: str

    def to_dict(self) -> dict:
        return {
            "objective": self.objective,
            "sections": [s.to_dict() for s in self.sections],
            "overall": self.overall,
        }


def parse_interpretation(text: str):
    """Split a narrative reply from its optional 'highlights:' bullet list."""
    narrative, features = text.strip(), []
    marker = "\nhighlights:"
    lowered = narrative.lower()
    if marker in lowered:
        cut = lowered.index(marker)
        tail = narrative[cut + len(marker):]
        narrative = narrative[:cut].strip()
        features = [
            line.strip()[2:].strip()
            for line in tail.splitlines()
            if line.strip().startswith("- ")
        ]
    return narrative, tuple(f for f in features if f)


def load_sidecar(run_dir, sidecar_rel: str) -> dict:
    path = Path(run_dir) / sidecar_rel
    try:
        meta = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise MissingSidecar(f"sidecar {sidecar_rel}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MissingSidecar(
            f"sidecar {sidecar_rel} is not valid JSON: {exc}"
        ) from exc
    if not isinstance(meta, dict):
        raise MissingSidecar(f"sidecar {sidecar_rel} must hold an object")
    return meta


def render_report_markdown(report: UnifiedReport) -> str:
    lines = ["# Analysis Report", "", f"**Objective:** {report.objective}", ""]
    for section in report.sections:
        lines.append(f"## {section.task_id}")
        lines.append("")
        lines.append(section.description)
        lines.append("")
        if section.narrative:
            lines.append(section.narrative)
            lines.append("")
        if section.statistics:
            for key in sorted(section.statistics):
                lines.append(f"- {key}: {section.statistics[key]}")
            lines.append("")
        for fig in section.figures:
            lines.append(f"![{section.task_id}]({fig})")
            lines.append("")
    lines.append("## Overall interpretation")
    lines.append("")
    lines.append(report.overall)
    lines.append("")
    return "\n".join(lines)
