"""Sandboxed subprocess execution of task scripts and preprocessing tools."""

from __future__ import annotations

import json
import os
import subprocess
import sys
import time
from pathlib import Path
from typing import Optional

from climalab.errors import ClimalabError
from climalab.lab.types import CodeArtifact, ExecutionResult, ToolInvocation

SHIM_PATH = Path(__file__).with_name("shim.py")

RUNTIMES = {"python3": sys.executable}


class SandboxSetupFailure(ClimalabError):
    http_status = 500


def prepare_workspace(path) -> Path:
    ws = Path(path)
    (ws / "inputs").mkdir(parents=True, exist_ok=True)
    (ws / "outputs").mkdir(parents=True, exist_ok=True)
    return ws


def _cap(data: bytes, limit: int) -> str:
    if data is None:
        data = b""
    if len(data) > limit:
        # keep the tail: tracebacks end with the line that matters
        data = b"...[truncated]...\n" + data[-limit:]
    return data.decode("utf-8", "replace")


def _produced_files(ws: Path) -> tuple:
    found = []
    outputs = ws / "outputs"
    if outputs.is_dir():
        for p in sorted(outputs.rglob("*")):
            if p.is_file():
                found.append(str(p.relative_to(ws)))
    if (ws / "result.json").is_file():
        found.append("result.json")
    return tuple(found)


def _interpreter(runtime_tag: str) -> str:
    try:
        return RUNTIMES[runtime_tag]
    except KeyError:
        raise SandboxSetupFailure(
            f"no interpreter for runtime {runtime_tag!r}"
        ) from None


def run_sandboxed(script_path, workspace, *, tools_dir="", data_root="",
                  timeout_s: float = 120.0, output_cap_bytes: int = 65536,
                  runtime_tag: str = "python3") -> ExecutionResult:
    ws = Path(workspace)
    script = Path(script_path)
    if not ws.is_dir():
        raise SandboxSetupFailure(f"workspace {ws} is not a directory")
    if not (ws / "outputs").is_dir():
        raise SandboxSetupFailure("workspace has no outputs/ directory")
    if not script.is_file():
        raise SandboxSetupFailure(f"script {script} does not exist")

    env = {
        "PATH": os.environ.get("PATH", "/usr/bin:/bin"),
        "LANG": os.environ.get("LANG", "C.UTF-8"),
        "PYTHONDONTWRITEBYTECODE": "1",
        "PYTHONHASHSEED": "0",
        "CLIMALAB_SANDBOX_WORKSPACE": str(ws.resolve()),
        "CLIMALAB_SANDBOX_TOOLS": str(Path(tools_dir).resolve()) if tools_dir else "",
        "CLIMALAB_SANDBOX_DATA": str(Path(data_root).resolve()) if data_root else "",
    }
    argv = [
        _interpreter(runtime_tag),
        str(SHIM_PATH),
        str(script.resolve()),
        "--workspace",
        str(ws.resolve()),
    ]
    started = time.monotonic()
    try:
        proc = subprocess.run(
            argv, capture_output=True, timeout=timeout_s, env=env, cwd=ws
        )
        exit_code = proc.returncode
        stdout, stderr = proc.stdout, proc.stderr
        timed_out = False
    except subprocess.TimeoutExpired as exc:
        exit_code = -1
        stdout = exc.stdout or b""
        stderr = (exc.stderr or b"") + b"\n[wall-clock timeout]"
        timed_out = True
    duration = time.monotonic() - started

    stdout_text = _cap(stdout, output_cap_bytes)
    stderr_text = _cap(stderr, output_cap_bytes)
    produced = _produced_files(ws)

    if timed_out:
        return ExecutionResult("timeout", exit_code, stdout_text, stderr_text,
                               produced, None, duration)

    manifest: Optional[dict] = None
    status = "error"
    if exit_code == 0:
        manifest_path = ws / "result.json"
        try:
            manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
            status = "ok"
        except (OSError, json.JSONDecodeError) as exc:
            stderr_text = (stderr_text +
                           f"\n[no parseable result.json: {exc}]").strip()
            manifest = None
            status = "error"
    return ExecutionResult(status, exit_code, stdout_text, stderr_text,
                           produced, manifest, duration)


def execute_artifact(artifact: CodeArtifact, workspace, *, tools_dir="",
                     data_root="", timeout_s: float = 120.0,
                     output_cap_bytes: int = 65536) -> ExecutionResult:
    """Write the artifact as script.py in the workspace and run it."""
    ws = Path(workspace)
    if not ws.is_dir():
        raise SandboxSetupFailure(f"workspace {ws} is not a directory")
    script = ws / "script.py"
    try:
        script.write_text(artifact.script_text, encoding="utf-8")
    except OSError as exc:
        raise SandboxSetupFailure(f"cannot write script: {exc}") from exc
    return run_sandboxed(
        script, ws, tools_dir=tools_dir, data_root=data_root,
        timeout_s=timeout_s, output_cap_bytes=output_cap_bytes,
        runtime_tag=artifact.runtime_tag,
    )


def run_tool(invocation: ToolInvocation, workspace, *, input_rel: str,
             output_name: Optional[str] = None, tools_dir="", data_root="",
             timeout_s: float = 120.0,
             output_cap_bytes: int = 65536) -> ExecutionResult:
    """Run a preprocessing tool against one staged input file."""
    ws = prepare_workspace(workspace)
    params = dict(invocation.params)
    params["input"] = input_rel
    if output_name:
        params["output"] = output_name
    (ws / "params.json").write_text(json.dumps(params, sort_keys=True),
                                    encoding="utf-8")
    return run_sandboxed(
        invocation.entrypoint, ws, tools_dir=tools_dir, data_root=data_root,
        timeout_s=timeout_s, output_cap_bytes=output_cap_bytes,
    )
