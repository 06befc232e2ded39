"""Result synthesis: figure narratives, the unified report, committees.

The committee runs in three model-facing stages. A chair call picks the
expert domains, one call per domain produces an assessment (these run
concurrently), and a final chair call writes the structured synthesis.
The sentiment statistic is computed here, never taken from model text.
"""

from __future__ import annotations

import concurrent.futures
from pathlib import Path
from typing import Optional

from climalab.errors import BackendFailure
from climalab.gateway import BackendTimeout, FixtureMiss, ModelRequest, UnknownBackend
from climalab.planner.core import extract_json
from climalab.synthesis import prompts
from climalab.synthesis.committee import (
    CommitteeConfig,
    CommitteeParseFailure,
    CommitteeReport,
    DomainParseFailure,
    EmptyPanel,
    ExpertAssessment,
    PanelFailure,
    sentiment_score,
)
from climalab.synthesis.report import (
    FigureInterpretation,
    ReportSection,
    ReportStructureError,
    MissingFigure,
    UnifiedReport,
    load_sidecar,
    parse_interpretation,
)

MAX_PANEL_WORKERS = 8


def _parse_domains(text: str, expert_count: int) -> tuple:
    doc = extract_json(text)
    domains = doc.get("domains")
    if not isinstance(domains, list):
        raise ValueError("chair output needs a 'domains' list")
    cleaned = []
    for entry in domains:
        if not isinstance(entry, str) or not entry.strip():
            raise ValueError("each domain must be a non-empty string")
        cleaned.append(entry.strip())
    if len(cleaned) != expert_count:
        raise ValueError(
            f"chair named {len(cleaned)} domains, need {expert_count}"
        )
    if len(set(cleaned)) != len(cleaned):
        raise ValueError("chair named duplicate domains")
    return tuple(cleaned)


def _parse_assessment(domain: str, text: str) -> ExpertAssessment:
    doc = extract_json(text)
    try:
        narrative = doc["narrative"]
        orientation = doc["orientation"]
    except KeyError as exc:
        raise ValueError(f"assessment missing field {exc}") from exc
    if not isinstance(narrative, str) or not narrative.strip():
        raise ValueError("assessment narrative must be a non-empty string")
    confidence = doc.get("confidence", 1.0)
    if isinstance(confidence, bool) or not isinstance(confidence, (int, float)):
        raise ValueError("confidence must be numeric")
    return ExpertAssessment(
        domain=domain,
        narrative=narrative.strip(),
        orientation=orientation,
        confidence=float(confidence),
    )


def _parse_chair_report(text: str) -> tuple:
    doc = extract_json(text)
    parsed = []
    for key in ("consensus", "disagreements", "uncertainties"):
        entries = doc.get(key, [])
        if not isinstance(entries, list):
            raise ValueError(f"chair synthesis field '{key}' must be a list")
        for entry in entries:
            if not isinstance(entry, str):
                raise ValueError(f"'{key}' entries must be strings")
        parsed.append(tuple(e.strip() for e in entries if e.strip()))
    return tuple(parsed)


class Synthesizer:
    def __init__(self, gateway, library=None, backend_id: str = "mock",
                 expert_count: int = 10, confidence_weighted: bool = False):
        self.gateway = gateway
        self.library = library
        self.backend_id = backend_id
        self.expert_count = expert_count
        self.confidence_weighted = confidence_weighted

    def _complete(self, system: str, user: str, seed: int = 0,
                  temperature: float = 0.0) -> str:
        req = ModelRequest.of(
            ("system", system),
            ("user", user),
            seed=seed,
            temperature=temperature,
            backend_id=self.backend_id,
        )
        try:
            return self.gateway.complete(self.backend_id, req).text
        except (FixtureMiss, BackendTimeout, UnknownBackend) as exc:
            raise BackendFailure(str(exc)) from exc

    # -- figure narratives ------------------------------------------------

    def interpret_figure(self, run_dir, figure_rel: str, sidecar_rel: str,
                         task, objective: str = "",
                         statistics: Optional[dict] = None,
                         ) -> FigureInterpretation:
        run_dir = Path(run_dir)
        if not (run_dir / figure_rel).is_file():
            raise MissingFigure(f"figure {figure_rel} does not exist")
        meta = load_sidecar(run_dir, sidecar_rel)
        text = self._complete(
            prompts.INTERPRET_SYSTEM,
            prompts.interpret_user(task, objective, figure_rel, meta,
                                   statistics=statistics),
        )
        if not text.strip():
            raise BackendFailure("empty figure interpretation")
        narrative, features = parse_interpretation(text)
        return FigureInterpretation(
            task_id=task.id,
            figure_path=figure_rel,
            narrative=narrative,
            highlighted_features=features,
        )

    # -- unified report ---------------------------------------------------

    def summarize_reports(self, objective: str, completed_tasks,
                          interpretations, run_dir,
                          statistics: Optional[dict] = None) -> UnifiedReport:
        run_dir = Path(run_dir)
        tasks = sorted(completed_tasks, key=lambda t: t.id)
        if not tasks:
            raise ReportStructureError(
                "a report needs at least one completed task"
            )
        known = {t.id for t in tasks}
        for interp in interpretations:
            if interp.task_id not in known:
                raise ReportStructureError(
                    f"interpretation references unknown task {interp.task_id}"
                )
            if not (run_dir / interp.figure_path).is_file():
                raise ReportStructureError(
                    f"figure {interp.figure_path} referenced by the report "
                    "does not exist"
                )

        stats = statistics or {}
        sections = []
        for task in tasks:
            own = [i for i in interpretations if i.task_id == task.id]
            pieces = []
            for interp in own:
                pieces.append(interp.narrative)
                pieces.extend(f"- {f}" for f in interp.highlighted_features)
            sections.append(ReportSection(
                task_id=task.id,
                description=task.description,
                narrative="\n".join(pieces),
                figures=tuple(i.figure_path for i in own),
                statistics=dict(stats.get(task.id, {})),
            ))

        overall = self._complete(
            prompts.REPORT_SYSTEM,
            prompts.report_user(objective, sections),
        )
        if not overall.strip():
            raise BackendFailure("empty overall interpretation")
        return UnifiedReport(
            objective=objective,
            sections=tuple(sections),
            overall=overall.strip(),
        )

    # -- committee --------------------------------------------------------

    def convene_committee(self, topic: str, report: UnifiedReport,
                          expert_count: Optional[int] = None,
                          ) -> CommitteeConfig:
        count = self.expert_count if expert_count is None else expert_count
        if count < 1:
            raise ValueError("expert count must be >= 1")
        context_lines = ()
        if self.library is not None:
            hits = self.library.retrieve_text(topic, k=3, status="validated")
            context_lines = tuple(rec.summary for rec, _ in hits)

        user = prompts.domains_user(topic, report.objective, report.overall,
                                    count, context_lines=context_lines)
        text = self._complete(prompts.CHAIR_SYSTEM, user)
        try:
            domains = _parse_domains(text, count)
        except ValueError as first_err:
            retry_user = prompts.domains_user(
                topic, report.objective, report.overall, count,
                context_lines=context_lines,
                attempt_note=str(first_err)[:200],
            )
            text = self._complete(prompts.CHAIR_SYSTEM, retry_user)
            try:
                domains = _parse_domains(text, count)
            except ValueError as exc:
                raise DomainParseFailure(
                    f"chair domains unparseable after re-prompt: {exc}"
                ) from exc

        member_prompts = tuple(
            prompts.assessment_user(domain, topic, report.objective,
                                    report.overall)
            for domain in domains
        )
        return CommitteeConfig(topic=topic, domains=domains,
                               prompts=member_prompts)

    def collect_assessments(self, config: CommitteeConfig):
        def ask(domain: str, user: str) -> ExpertAssessment:
            return _parse_assessment(
                domain, self._complete(prompts.EXPERT_SYSTEM, user)
            )

        assessments, failures = [], {}
        workers = min(MAX_PANEL_WORKERS, config.expert_count)
        with concurrent.futures.ThreadPoolExecutor(workers) as pool:
            futures = [
                pool.submit(ask, domain, user)
                for domain, user in zip(config.domains, config.prompts)
            ]
            for domain, future in zip(config.domains, futures):
                try:
                    assessments.append(future.result())
                except (BackendFailure, ValueError) as exc:
                    failures[domain] = str(exc)

        if 2 * len(failures) > config.expert_count:
            raise PanelFailure(
                f"{len(failures)} of {config.expert_count} panel members "
                "failed",
                failed=sorted(failures),
            )
        return tuple(assessments), failures

    def synthesize_committee_report(self, config: CommitteeConfig,
                                    assessments,
                                    failures: Optional[dict] = None,
                                    ) -> CommitteeReport:
        assessments = tuple(assessments)
        if not assessments:
            raise EmptyPanel("no assessments to synthesize")

        user = prompts.chair_report_user(config.topic, assessments)
        text = self._complete(prompts.CHAIR_REPORT_SYSTEM, user)
        try:
            consensus, disagreements, uncertainties = _parse_chair_report(text)
        except ValueError as first_err:
            retry_user = prompts.chair_report_user(
                config.topic, assessments,
                attempt_note=str(first_err)[:200],
            )
            text = self._complete(prompts.CHAIR_REPORT_SYSTEM, retry_user)
            try:
                consensus, disagreements, uncertainties = \
                    _parse_chair_report(text)
            except ValueError as exc:
                raise CommitteeParseFailure(
                    f"chair synthesis unparseable after re-prompt: {exc}"
                ) from exc

        if failures:
            uncertainties = uncertainties + tuple(
                f"no assessment from {domain}: {failures[domain]}"
                for domain in sorted(failures)
            )
        return CommitteeReport(
            topic=config.topic,
            assessments=assessments,
            consensus=consensus,
            disagreements=disagreements,
            uncertainties=uncertainties,
            sentiment=sentiment_score(
                assessments, confidence_weighted=self.confidence_weighted
            ),
        )

    def run_committee(self, topic: str, report: UnifiedReport,
                      expert_count: Optional[int] = None) -> CommitteeReport:
        config = self.convene_committee(topic, report,
                                        expert_count=expert_count)
        assessments, failures = self.collect_assessments(config)
        return self.synthesize_committee_report(config, assessments, failures)
