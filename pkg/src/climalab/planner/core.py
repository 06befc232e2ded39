"""Planner operations: summarize, generate candidates, merge, review."""

from __future__ import annotations

import json
import re
from typing import Optional

from pydantic import ValidationError

from climalab.errors import BackendFailure, ClimalabError
from climalab.gateway import ModelRequest
from climalab.gateway.backends import FixtureMiss
from climalab.gateway.core import BackendTimeout, UnknownBackend
from climalab.planner import prompts
from climalab.planner.schema import (
    Plan,
    ReviewDecision,
    UserQuery,
    canonical_plan_json,
    find_violations,
)


class PlanParseFailure(ClimalabError):
    http_status = 502


class MergeParseFailure(ClimalabError):
    http_status = 502


class PatchInvariantViolation(ClimalabError):
    http_status = 422


_FENCE = re.compile(r"```(?:json)?\s*\n(.*?)```", re.DOTALL)


def extract_json(text: str) -> dict:
    """First fenced JSON block, else the first balanced top-level object."""
    m = _FENCE.search(text)
    if m:
        return json.loads(m.group(1))
    start = text.find("{")
    if start < 0:
        raise ValueError("no JSON object in model output")
    depth = 0
    in_string = False
    escape = False
    for i in range(start, len(text)):
        c = text[i]
        if in_string:
            if escape:
                escape = False
            elif c == "\\":
                escape = True
            elif c == '"':
                in_string = False
            continue
        if c == '"':
            in_string = True
        elif c == "{":
            depth += 1
        elif c == "}":
            depth -= 1
            if depth == 0:
                return json.loads(text[start : i + 1])
    raise ValueError("unbalanced JSON object in model output")


def _parse_plan(text: str) -> Plan:
    doc = extract_json(text)
    plan = Plan.model_validate(doc)
    structural = find_violations(plan)
    if structural:
        raise ValueError(
            "; ".join(f"{v.code}: {v.message}" for v in structural)
        )
    return plan


def apply_review(plan: Plan, decision: ReviewDecision,
                 catalog=None) -> Plan:
    """Apply an approving review; rejection is handled by the run loop."""
    if not decision.approved:
        raise PatchInvariantViolation(
            "apply_review expects an approving decision; rejections return "
            "the run to planning"
        )
    if not decision.edits:
        return plan
    merged = plan.model_dump(mode="json")
    merged.update(decision.edits)
    try:
        patched = Plan.model_validate(merged)
    except ValidationError as exc:
        raise PatchInvariantViolation(f"patched plan invalid: {exc}") from exc
    violations = find_violations(patched, catalog=catalog)
    if violations:
        raise PatchInvariantViolation(
            "; ".join(f"{v.code}: {v.message}" for v in violations)
        )
    return patched


class Planner:
    def __init__(self, gateway, library, catalog, fetcher,
                 backend_id: str = "mock", candidate_count: int = 3,
                 candidate_temperature: float = 0.7):
        self.gateway = gateway
        self.library = library
        self.catalog = catalog
        self.fetcher = fetcher
        self.backend_id = backend_id
        self.candidate_count = candidate_count
        self.candidate_temperature = candidate_temperature

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

    def summarize_requirements(self, query: UserQuery) -> str:
        text = self._complete(
            prompts.SUMMARIZE_SYSTEM,
            prompts.summarize_user(query.text, query.attached_documents),
        )
        if not text.strip():
            raise BackendFailure("empty requirement summary")
        return text.strip()

    def gather_context(self, summary: str) -> dict:
        plan_hits = self.library.retrieve_text(
            summary, k=3, kind="plan", status="validated"
        )
        template_hits = self.library.retrieve_text(
            summary, k=3, kind="template", status="validated"
        )
        return {
            "plans": [r.summary for r, _ in plan_hits],
            "templates": [r.summary for r, _ in template_hits],
            "web": self.fetcher.fetch(summary) if self.fetcher else [],
        }

    def generate_candidates(self, summary: str, context: Optional[dict] = None,
                            n: Optional[int] = None,
                            review_comment: str = "") -> list[Plan]:
        n = self.candidate_count if n is None else n
        if n < 1:
            raise ValueError("candidate count must be >= 1")
        context = context if context is not None else self.gather_context(summary)
        digest = prompts.catalog_digest(self.catalog)
        rendered = prompts.render_context(
            context.get("plans", []),
            context.get("templates", []),
            context.get("web", []),
        )
        plans = []
        for i in range(n):
            seed = i + 1
            user = prompts.candidate_user(summary, digest, rendered,
                                          review_comment=review_comment)
            text = self._complete(prompts.CANDIDATE_SYSTEM, user, seed=seed,
                                  temperature=self.candidate_temperature)
            try:
                plans.append(_parse_plan(text))
                continue
            except (ValueError, ValidationError) as first_err:
                retry_user = prompts.candidate_user(
                    summary, digest, rendered,
                    review_comment=review_comment,
                    attempt_note=str(first_err)[:200],
                )
            text = self._complete(prompts.CANDIDATE_SYSTEM, retry_user,
                                  seed=seed,
                                  temperature=self.candidate_temperature)
            try:
                plans.append(_parse_plan(text))
            except (ValueError, ValidationError) as exc:
                raise PlanParseFailure(
                    f"candidate {i} unparseable after re-prompt: {exc}",
                    candidate=i,
                ) from exc
        return plans

    def merge_plans(self, candidates: list[Plan]) -> Plan:
        if not candidates:
            raise MergeParseFailure("no candidate plans to merge")
        if len(candidates) == 1:
            return candidates[0]
        dumps = [canonical_plan_json(p) for p in candidates]
        if len(set(dumps)) == 1:
            return candidates[0]
        text = self._complete(prompts.MERGE_SYSTEM, prompts.merge_user(dumps))
        try:
            return _parse_plan(text)
        except (ValueError, ValidationError) as exc:
            raise MergeParseFailure(f"merged plan unparseable: {exc}") from exc

    def validate_plan(self, plan: Plan):
        return find_violations(plan, catalog=self.catalog)
