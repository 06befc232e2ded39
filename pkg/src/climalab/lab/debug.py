"""Bounded auto-repair loop shared by execution and validation failures."""

from __future__ import annotations

from climalab.errors import ClimalabError
from climalab.lab.types import CodeArtifact, DebugTranscript, ExecutionResult

EXCERPT_CHARS = 2000


class DebugExhausted(ClimalabError):
    http_status = 500


def make_sanitizer(workspace="", tools_dir="", data_root=""):
    """Replace run-local absolute paths so repair prompts stay replayable."""
    subs = [
        (str(workspace), "<workspace>"),
        (str(tools_dir), "<tools>"),
        (str(data_root), "<data>"),
    ]

    def sanitize(text: str) -> str:
        for path, placeholder in subs:
            if path:
                text = text.replace(path, placeholder)
        # Drop traceback frames that still point at absolute paths
        # (interpreter internals); they vary by installation.
        kept = [ln for ln in text.splitlines() if ' "/' not in ln]
        return "\n".join(kept)

    return sanitize


def failure_excerpt(result: ExecutionResult) -> str:
    if result.status == "timeout":
        text = "execution hit the wall-clock timeout\n" + result.stderr
    else:
        text = result.stderr or f"exit code {result.exit_code} with no stderr"
    return text[-EXCERPT_CHARS:].strip()


def verdict_excerpt(verdicts) -> str:
    lines = ["validation failed:"]
    for verdict in verdicts:
        for check_id, message in verdict.findings:
            lines.append(f"  {verdict.validator} {check_id}: {message}")
    return "\n".join(lines)[-EXCERPT_CHARS:]


def run_debug_loop(task, artifact: CodeArtifact, result: ExecutionResult, *,
                   execute, revise, validate, cap: int,
                   sanitize=lambda s: s, on_round=None):
    """Iterate revise→execute→validate until green or the cap is spent.

    Validation rejections re-enter the same loop and draw down the same cap.
    Returns (artifact, result, verdicts, transcript); raises DebugExhausted
    with the transcript attached when the budget runs out.
    """
    transcript = DebugTranscript(task.id, cap)
    while True:
        if result.status == "ok":
            verdicts = validate(result)
            if all(v.passed for v in verdicts):
                return artifact, result, tuple(verdicts), transcript
            problem = verdict_excerpt(verdicts)
        else:
            problem = sanitize(failure_excerpt(result))

        if len(transcript.rounds) >= cap:
            exc = DebugExhausted(
                f"task {task.id}: still failing after {cap} repair rounds",
                task_id=task.id,
                rounds=len(transcript.rounds),
            )
            exc.transcript = transcript
            exc.last_result = result
            exc.last_artifact = artifact
            raise exc

        artifact = revise(task, artifact, problem)
        transcript.append(problem[:500], artifact.revision)
        if on_round is not None:
            on_round(len(transcript.rounds), artifact)
        result = execute(artifact)
