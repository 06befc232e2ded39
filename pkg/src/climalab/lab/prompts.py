"""Prompt builders for code generation and repair.

Same rule as the planner prompts: content must be run-independent. Task
fields, tool names, template code, and sanitized error excerpts are allowed;
filesystem paths, run ids, and timestamps are not.
"""

from __future__ import annotations

CODEGEN_SYSTEM = (
    "You are the coding agent of a climate-analysis platform. Respond with "
    "one complete python script inside a ```python fence. The script reads "
    "--workspace from argv, loads params.json from the workspace root for "
    "its input file listing, reads Grid-JSON inputs under inputs/, writes "
    "outputs under outputs/, saves every figure as an SVG with a "
    "<name>.svg.meta.json sidecar declaring title, xlabel, ylabel, and "
    "units, and finally writes a result.json manifest declaring outputs, "
    "figures, statistics, variable, and units. Exit 0 on success."
)

DEBUG_SYSTEM = (
    "You are the debugging agent of a climate-analysis platform. You are "
    "given a failing script and the error it produced. Respond with the "
    "corrected complete script inside a ```python fence. Keep the workspace "
    "contract unchanged."
)


def _task_block(task) -> list[str]:
    lines = [
        f"task: {task.id}",
        f"description: {task.description}",
        f"method: {task.method}",
    ]
    if task.inputs:
        lines.append("inputs: " + ", ".join(task.inputs))
    if task.outputs:
        lines.append("expected outputs: " + ", ".join(task.outputs))
    return lines


def codegen_user(task, objective: str, tool_docs: list[str],
                 template_code: str = "", attempt_note: str = "") -> str:
    lines = ["[generate-code]", f"objective: {objective}"]
    lines.extend(_task_block(task))
    if attempt_note:
        lines.append(f"previous attempt invalid: {attempt_note}")
    if tool_docs:
        lines.append("available helper modules and tools:")
        lines.extend(f"  * {doc}" for doc in tool_docs)
    if template_code:
        lines.append("reference template (adapt to this task):")
        lines.append("```python")
        lines.append(template_code.rstrip("\n"))
        lines.append("```")
    return "\n".join(lines)


def debug_user(task, script_text: str, error_excerpt: str,
               revision: int) -> str:
    lines = ["[debug-code]"]
    lines.extend(_task_block(task))
    lines.append(f"revision: {revision}")
    lines.append("error:")
    lines.append(error_excerpt)
    lines.append("current script:")
    lines.append("```python")
    lines.append(script_text.rstrip("\n"))
    lines.append("```")
    return "\n".join(lines)
