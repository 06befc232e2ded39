from climalab.synthesis.committee import (
    CommitteeConfig,
    CommitteeParseFailure,
    CommitteeReport,
    DomainParseFailure,
    EmptyPanel,
    ExpertAssessment,
    ORIENTATIONS,
    PanelFailure,
    render_committee_markdown,
    sentiment_score,
)
from climalab.synthesis.core import Synthesizer
from climalab.synthesis.report import (
    FigureInterpretation,
    MissingFigure,
    MissingSidecar,
    ReportSection,
    ReportStructureError,
    UnifiedReport,
    load_sidecar,
    parse_interpretation,
    render_report_markdown,
)

__all__ = [
    "CommitteeConfig",
    "CommitteeParseFailure",
    "CommitteeReport",
    "DomainParseFailure",
    "EmptyPanel",
    "ExpertAssessment",
    "FigureInterpretation",
    "MissingFigure",
    "MissingSidecar",
    "ORIENTATIONS",
    "PanelFailure",
    "ReportSection",
    "ReportStructureError",
    "Synthesizer",
    "UnifiedReport",
    "load_sidecar",
    "parse_interpretation",
    "render_committee_markdown",
    "render_report_markdown",
    "sentiment_score",
]
