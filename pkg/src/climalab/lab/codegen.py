"""Script generation from task descriptions, retrieved templates, tool docs."""

from __future__ import annotations

import re
from typing import Optional

from climalab.errors import BackendFailure, ClimalabError
from climalab.gateway import ModelRequest
from climalab.gateway.backends import FixtureMiss
from climalab.gateway.core import BackendTimeout, UnknownBackend
from climalab.lab import prompts
from climalab.lab.types import CodeArtifact


class CodeParseFailure(ClimalabError):
    http_status = 502


_PY_FENCE = re.compile(r"```(?:python|py)?\s*\n(.*?)```", re.DOTALL)


def extract_script(text: str) -> str:
    m = _PY_FENCE.search(text)
    if not m or not m.group(1).strip():
        raise ValueError("no fenced script in model output")
    return m.group(1)


def tool_doc_lines(library) -> list[str]:
    """One line per validated tool: name plus description, sorted by name."""
    rows = library.list_records(kind="tool_doc", status="validated")
    docs = []
    for rec in rows:
        name = rec.payload.get("name", "")
        desc = rec.payload.get("description", "")
        docs.append(f"{name}: {desc}".strip().rstrip(":"))
    return sorted(docs)


def retrieve_template(library, description: str,
                      threshold: float) -> tuple[Optional[str], float]:
    hits = library.retrieve_text(description, k=1, kind="template",
                                 status="validated")
    if hits and hits[0][1] >= threshold:
        return hits[0][0].payload.get("code", ""), hits[0][1]
    return None, hits[0][1] if hits else 0.0


class CodeGenerator:
    def __init__(self, gateway, library, backend_id: str = "mock",
                 similarity_threshold: float = 0.92):
        self.gateway = gateway
        self.library = library
        self.backend_id = backend_id
        self.similarity_threshold = similarity_threshold

    def _complete(self, system: str, user: str) -> str:
        req = ModelRequest.of(("system", system), ("user", user),
                              backend_id=self.backend_id)
        try:
            return self.gateway.complete(self.backend_id, req).text
        except (FixtureMiss, BackendTimeout, UnknownBackend) as exc:
            raise BackendFailure(str(exc)) from exc

    def generate_code(self, task, objective: str = "") -> CodeArtifact:
        template, _score = retrieve_template(
            self.library, task.description, self.similarity_threshold
        )
        source = "template_adapted" if template else "generated"
        docs = tool_doc_lines(self.library)
        user = prompts.codegen_user(task, objective, docs,
                                    template_code=template or "")
        text = self._complete(prompts.CODEGEN_SYSTEM, user)
        try:
            script = extract_script(text)
        except ValueError as first_err:
            retry = prompts.codegen_user(
                task, objective, docs, template_code=template or "",
                attempt_note=str(first_err)[:200],
            )
            text = self._complete(prompts.CODEGEN_SYSTEM, retry)
            try:
                script = extract_script(text)
            except ValueError as exc:
                raise CodeParseFailure(
                    f"task {task.id}: no script after re-prompt: {exc}",
                    task_id=task.id,
                ) from exc
        return CodeArtifact(task_id=task.id, script_text=script, source=source)

    def revise_code(self, task, artifact: CodeArtifact,
                    error_excerpt: str) -> CodeArtifact:
        user = prompts.debug_user(task, artifact.script_text, error_excerpt,
                                  revision=artifact.revision + 1)
        text = self._complete(prompts.DEBUG_SYSTEM, user)
        try:
            script = extract_script(text)
        except ValueError as exc:
            raise CodeParseFailure(
                f"task {task.id}: revision {artifact.revision + 1} is not a "
                f"script: {exc}",
                task_id=task.id,
            ) from exc
        return artifact.revised(script)
