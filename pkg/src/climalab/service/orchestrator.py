"""Drives runs through their stages, emitting one event per meaningful step.

Stage work happens on a per-run background thread; review and verdict
submissions come in on API threads and hand the run back to a fresh
worker. Every model-consuming step, execution, verdict, and promotion
lands in the event log.
"""

from __future__ import annotations

import dataclasses
import threading
import time
from types import SimpleNamespace
from typing import Optional

from climalab.errors import ClimalabError
from climalab.lab import LabRunner, promote_on_success
from climalab.planner import (
    Plan,
    Planner,
    ReviewDecision,
    UserQuery,
    apply_review,
)
from climalab.service.state import TERMINAL, WrongStage
from climalab.service.store import RunHandle, RunStore
from climalab.synthesis import (
    Synthesizer,
    render_committee_markdown,
    render_report_markdown,
)


class UnknownTask(ClimalabError):
    http_status = 404


class PlanningFailure(ClimalabError):
    http_status = 422


class Orchestrator:
    def __init__(self, settings, gateway, library, catalog, store: RunStore,
                 fetcher=None):
        self.settings = settings
        self.gateway = gateway
        self.library = library
        self.catalog = catalog
        self.store = store
        self.fetcher = fetcher
        self.backend_id = settings.default_backend
        self._threads: dict[str, threading.Thread] = {}
        self._lock = threading.Lock()

    # -- component factories ----------------------------------------------

    def _planner(self) -> Planner:
        return Planner(
            self.gateway, self.library, self.catalog, self.fetcher,
            backend_id=self.backend_id,
            candidate_count=self.settings.candidate_count,
            candidate_temperature=self.settings.candidate_temperature,
        )

    def _lab(self, worker_count: Optional[int] = None) -> LabRunner:
        settings = self.settings
        if worker_count and worker_count != settings.worker_count:
            settings = dataclasses.replace(settings,
                                           worker_count=worker_count)
        return LabRunner(settings, self.gateway, self.library,
                         self.catalog, backend_id=self.backend_id)

    def _synthesizer(self, expert_count: Optional[int] = None) -> Synthesizer:
        return Synthesizer(
            self.gateway, library=self.library, backend_id=self.backend_id,
            expert_count=expert_count or self.settings.expert_count,
            confidence_weighted=self.settings.sentiment_confidence_weighted,
        )

    # -- lifecycle ----------------------------------------------------------

    def create_run(self, query_text: str, attached_documents=(),
                   auto_approve: bool = False,
                   worker_count: Optional[int] = None,
                   expert_count: Optional[int] = None) -> str:
        query = UserQuery(text=query_text,
                          attached_documents=list(attached_documents))
        options = {
            "auto_approve": bool(auto_approve),
            "worker_count": worker_count or self.settings.worker_count,
            "expert_count": expert_count or self.settings.expert_count,
        }
        handle = self.store.create(query.model_dump(), options)
        self._spawn(handle, self._drive_planning)
        return handle.run_id

    def open_run(self, run_id: str) -> RunHandle:
        return self.store.open(run_id)

    def wait(self, run_id: str, timeout_s: float = 120.0) -> str:
        """Block until the run parks (terminal or awaiting_review)."""
        handle = self.store.open(run_id)
        deadline = time.monotonic() + timeout_s
        while time.monotonic() < deadline:
            with self._lock:
                worker = self._threads.get(run_id)
            if worker is not None and worker.is_alive():
                worker.join(timeout=min(0.5, deadline - time.monotonic()))
                continue
            stage = handle.state.stage
            if stage in TERMINAL or stage == "awaiting_review":
                return stage
            time.sleep(0.02)
        return handle.state.stage

    def _spawn(self, handle: RunHandle, target):
        worker = threading.Thread(
            target=self._guarded, args=(handle, target),
            name=f"run-{handle.run_id}", daemon=True,
        )
        with self._lock:
            self._threads[handle.run_id] = worker
        worker.start()

    def _guarded(self, handle: RunHandle, target):
        try:
            target(handle)
        except Exception as exc:  # any stage error fails the run, audited
            try:
                stage = handle.state.stage
                if stage not in TERMINAL:
                    handle.transition("failed", failed_stage=stage,
                                      error=str(exc))
            except ClimalabError:
                pass  # lost a cancel race; the run is already terminal

    # -- planning -----------------------------------------------------------

    def _drive_planning(self, handle: RunHandle):
        handle.transition("planning")
        self._plan_once(handle, review_comment=handle.state.review_comment)

    def _plan_once(self, handle: RunHandle, review_comment: str = ""):
        planner = self._planner()
        query = UserQuery.model_validate(handle.state.query)

        summary = planner.summarize_requirements(query)
        handle.emit("requirements_summarized", {"summary": summary})

        context = planner.gather_context(summary)
        handle.emit("planning_context", {
            "plans": context.get("plans", []),
            "templates": context.get("templates", []),
            "web": [b.get("title", "") for b in context.get("web", [])],
            "review_comment": review_comment,
        })

        candidates = planner.generate_candidates(
            summary, context, review_comment=review_comment)
        for i, candidate in enumerate(candidates, start=1):
            handle.emit("candidate_plan_generated", {
                "candidate": i,
                "diagnostics": [t.id for t in candidate.diagnostics],
            })

        plan = planner.merge_plans(candidates)
        violations = planner.validate_plan(plan)
        handle.emit("plan_validated", {
            "violations": [f"{v.code}: {v.message}" for v in violations],
        })
        if violations:
            raise PlanningFailure(
                f"merged plan invalid: {violations[0].code}"
            )

        handle.write_doc("plan.json", plan.model_dump(mode="json"))
        handle.emit("plan_proposed", {"plan": plan.model_dump(mode="json")})
        handle.transition("awaiting_review")

        if handle.state.options.get("auto_approve"):
            decision = ReviewDecision(reviewer="auto", approved=True)
            self._apply_decision(handle, decision, synthetic=True)

    # -- review -------------------------------------------------------------

    def submit_review(self, run_id: str, decision: ReviewDecision) -> str:
        handle = self.store.open(run_id)
        if handle.state.stage != "awaiting_review":
            raise WrongStage(
                f"run is {handle.state.stage}; review needs awaiting_review"
            )
        self._apply_decision(handle, decision, synthetic=False,
                             background=True)
        return handle.state.stage

    def _apply_decision(self, handle: RunHandle, decision: ReviewDecision,
                        synthetic: bool, background: bool = False):
        if decision.approved:
            plan = Plan.model_validate(handle.read_doc("plan.json"))
            # edits are validated before any stage change
            plan = apply_review(plan, decision, catalog=self.catalog)
            handle.write_doc("plan.json", plan.model_dump(mode="json"))
        handle.emit("review_submitted", {
            "reviewer": decision.reviewer,
            "approved": decision.approved,
            "comment": decision.comment,
            "edited": bool(decision.edits),
            "synthetic": synthetic,
        })
        if decision.approved:
            handle.transition("executing")
            if background:
                self._spawn(handle, self._drive_execution)
            else:
                self._drive_execution(handle)
        else:
            handle.transition("planning")
            if background:
                self._spawn(
                    handle,
                    lambda h: self._plan_once(
                        h, review_comment=decision.comment),
                )
            else:
                self._plan_once(handle, review_comment=decision.comment)

    # -- execution and synthesis ---------------------------------------------

    def _drive_execution(self, handle: RunHandle):
        plan = Plan.model_validate(handle.read_doc("plan.json"))
        lab = self._lab(handle.state.options.get("worker_count"))

        results = lab.execute_plan(
            plan, handle.workdir,
            sink=lambda etype, payload: handle.emit(etype, payload),
            run_ref=handle.run_id,
        )
        failed = results.failed_tasks()
        skipped = [tid for tid in results.order
                   if results.outcomes[tid].status == "skipped"]
        handle.emit("execution_finished", {
            "ok": results.ok, "failed": failed, "skipped": skipped,
        })
        if not results.ok:
            handle.transition(
                "failed", failed_stage="executing",
                error=f"tasks failed: {', '.join(failed + skipped)}")
            return

        handle.transition("validating")
        for tid in results.order:
            outcome = results.outcomes[tid]
            for verdict in outcome.verdicts:
                handle.emit("validation_summary", {
                    "task": tid,
                    "validator": verdict.validator,
                    "passed": verdict.passed,
                    "findings": [list(f) for f in verdict.findings],
                })

        handle.transition("synthesizing")
        self._synthesize(handle, plan, results)
        handle.transition("completed")

    def _synthesize(self, handle: RunHandle, plan: Plan, results):
        options = handle.state.options
        synth = self._synthesizer(options.get("expert_count"))
        tasks_by_id = {t.id: t for t in plan.diagnostics}

        interpretations = []
        for tid, figure_rel, sidecar_rel in results.figures:
            interp = synth.interpret_figure(
                handle.workdir, figure_rel, sidecar_rel, tasks_by_id[tid],
                objective=plan.objective,
                statistics=results.statistics.get(tid),
            )
            interpretations.append(interp)
            handle.emit("figure_interpreted", {
                "task": tid,
                "figure": figure_rel,
                "highlights": list(interp.highlighted_features),
            })

        completed = [tasks_by_id[tid] for tid in results.order
                     if results.outcomes[tid].status == "ok"]
        report = synth.summarize_reports(
            plan.objective, completed, interpretations, handle.workdir,
            statistics=results.statistics,
        )
        handle.write_doc("report.json", report.to_dict())
        handle.write_doc("report.md", render_report_markdown(report))
        handle.emit("report_ready", {"sections": len(report.sections)})

        topic = handle.state.query.get("text", plan.objective)
        config = synth.convene_committee(topic, report)
        handle.emit("committee_convened", {"domains": list(config.domains)})
        assessments, failures = synth.collect_assessments(config)
        for assessment in assessments:
            handle.emit("committee_assessed", {
                "domain": assessment.domain,
                "orientation": assessment.orientation,
                "confidence": assessment.confidence,
            })
        committee = synth.synthesize_committee_report(
            config, assessments, failures)
        handle.write_doc("committee.json", committee.to_dict())
        handle.write_doc("committee.md", render_committee_markdown(committee))
        handle.emit("committee_ready", {
            "sentiment": committee.sentiment,
            "experts": len(committee.assessments),
        })

    # -- verdicts -------------------------------------------------------------

    def submit_verdict(self, run_id: str, task_id: str, approved: bool,
                       reviewer: str = "operator", comment: str = "") -> dict:
        handle = self.store.open(run_id)
        if handle.state.stage not in ("validating", "completed"):
            raise WrongStage(
                f"run is {handle.state.stage}; verdicts need validating or "
                "completed"
            )
        plan_doc = handle.read_doc("plan.json")
        plan = Plan.model_validate(plan_doc) if plan_doc else None
        task = None
        if plan is not None:
            task = next((t for t in plan.diagnostics if t.id == task_id), None)
        if task is None:
            raise UnknownTask(f"no task {task_id!r} in run {run_id}")
        workspace = handle.workdir / "tasks" / task_id
        if not (workspace / "outputs").is_dir():
            raise UnknownTask(f"task {task_id!r} left no outputs to judge")

        template_id = ""
        if approved:
            approval = SimpleNamespace(approved=True, run_ref=run_id,
                                       reviewer=reviewer)
            template_id = promote_on_success(task, self.library, workspace,
                                             approval=approval,
                                             run_ref=run_id)
        handle.emit("verdict_submitted", {
            "task": task_id, "approved": approved, "reviewer": reviewer,
            "comment": comment, "template_id": template_id,
        })
        if approved:
            handle.emit("template_promoted", {
                "task": task_id, "template_id": template_id,
            })
        return {"approved": approved, "template_id": template_id}

    # -- cancellation ----------------------------------------------------------

    def cancel(self, run_id: str) -> str:
        """Flip a parked run to cancelled; an actively working run finishes
        its current stage first and fails the transition race cleanly."""
        handle = self.store.open(run_id)
        with handle.lock:
            if handle.state.stage in TERMINAL:
                raise WrongStage(f"run already {handle.state.stage}")
            handle.transition("cancelled")
        return handle.state.stage
