"""Chair/sub-expert committee types and the sentiment statistic."""

from __future__ import annotations

from dataclasses import dataclass

from climalab.errors import ClimalabError

ORIENTATIONS = ("positive", "negative")


class DomainParseFailure(ClimalabError):
    http_status = 502


class CommitteeParseFailure(ClimalabError):
    http_status = 502


class PanelFailure(ClimalabError):
    http_status = 502


class EmptyPanel(ClimalabError):
    http_status = 422


@dataclass(frozen=True)
class ExpertAssessment:
    domain: str
    narrative: str
    orientation: str
    confidence: float = 1.0

    def __post_init__(self):
        if self.orientation not in ORIENTATIONS:
            raise ValueError(f"orientation must be one of {ORIENTATIONS}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must lie in [0, 1]")
        if not self.domain.strip():
            raise ValueError("assessment needs a domain")

    def to_dict(self) -> dict:
        return {
            "domain": self.domain,
            "narrative": self.narrative,
            "orientation": self.orientation,
            "confidence": self.confidence,
        }


@dataclass(frozen=True)
class CommitteeConfig:
    topic: str
    domains: tuple
    prompts: tuple  # one user prompt per domain, same order

    def __post_init__(self):
        if len(self.domains) != len(self.prompts):
            raise ValueError("one prompt per domain required")

    @property
    def expert_count(self) -> int:
        return len(self.domains)


@dataclass(frozen=True)
class CommitteeReport:
    topic: str
    assessments: tuple
    consensus: tuple
    disagreements: tuple
    uncertainties: tuple
    sentiment: float

    def __post_init__(self):
        if not -1.0 <= self.sentiment <= 1.0:
            raise ValueError("sentiment must lie in [-1, 1]")

    def to_dict(self) -> dict:
        return {
            "topic": self.topic,
            "assessments": [a.to_dict() for a in self.assessments],
            "consensus": list(self.consensus),
            "disagreements": list(self.disagreements),
            "uncertainties": list(self.uncertainties),
            "sentiment": self.sentiment,
        }


def sentiment_score(assessments, confidence_weighted: bool = False) -> float:
    """(n_pos - n_neg) / (n_pos + n_neg); always computed, never model text."""
    panel = list(assessments)
    if not panel:
        raise EmptyPanel("cannot score an empty panel")
    if confidence_weighted:
        total = sum(a.confidence for a in panel)
        if total == 0.0:
            return 0.0
        signed = sum(
            a.confidence if a.orientation == "positive" else -a.confidence
            for a in panel
        )
        return signed / total
    positive = sum(1 for a in panel if a.orientation == "positive")
    negative = len(panel) - positive
    return (positive - negative) / len(panel)


def render_committee_markdown(report: CommitteeReport) -> str:
    lines = [
        "# Committee Assessment",
        "",
        f"**Topic:** {report.topic}",
        "",
        f"**Sentiment:** {report.sentiment:+.2f} "
        "(-1 predominantly negative, +1 predominantly positive)",
        "",
        "## Panel",
        "",
    ]
    for a in report.assessments:
        lines.append(f"- **{a.domain}** ({a.orientation}, "
                     f"confidence {a.confidence:g}): {a.narrative}")
    for title, entries in (
        ("Consensus", report.consensus),
        ("Disagreements", report.disagreements),
        ("Key uncertainties", report.uncertainties),
    ):
        lines.append("")
        lines.append(f"## {title}")
        lines.append("")
        if entries:
            lines.extend(f"- {entry}" for entry in entries)
        else:
            lines.append("(none recorded)")
    lines.append("")
    return "\n".join(lines)
