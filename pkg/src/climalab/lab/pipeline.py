"""Plan execution: provision, generate, run, repair, validate, queue drafts."""

from __future__ import annotations

import hashlib
import json
import shutil
from pathlib import Path

from climalab.catalog import CatalogQuery
from climalab.errors import ClimalabError
from climalab.lab.codegen import CodeGenerator
from climalab.lab.debug import DebugExhausted, make_sanitizer, run_debug_loop
from climalab.lab.graph import build_task_graph
from climalab.lab.preprocess import compile_preprocess
from climalab.lab.sandbox import execute_artifact, prepare_workspace, run_tool
from climalab.lab.scheduler import schedule_run
from climalab.lab.types import RunResults, TaskOutcome
from climalab.lab.validate import validate_outputs
from climalab.library import TemplateRecord


class DatasetResolutionFailure(ClimalabError):
    http_status = 422


class PreprocessFailure(ClimalabError):
    http_status = 500


def _noop_sink(event_type: str, payload: dict):
    return None


def output_digest(workspace) -> str:
    """Content digest over outputs/, independent of production order."""
    ws = Path(workspace)
    entries = []
    outputs = ws / "outputs"
    if outputs.is_dir():
        for path in sorted(outputs.rglob("*")):
            if path.is_file():
                entries.append(
                    (str(path.relative_to(ws)),
                     hashlib.sha256(path.read_bytes()).hexdigest())
                )
    payload = json.dumps(entries, sort_keys=True).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()


def build_triplet(task_description: str, workspace) -> TemplateRecord:
    ws = Path(workspace)
    code = (ws / "script.py").read_text(encoding="utf-8")
    return TemplateRecord(
        query_text=task_description,
        code=code,
        result_digest=output_digest(ws),
    )


def promote_on_success(task, library, workspace, approval=None,
                       run_ref: str = ""):
    """Both verdicts passed is the caller's precondition."""
    triplet = build_triplet(task.description, workspace)
    if approval is not None and getattr(approval, "approved", False):
        return library.promote_template(triplet, approval)
    return library.queue_draft(triplet, run_ref=run_ref)


class LabRunner:
    def __init__(self, settings, gateway, library, catalog,
                 backend_id: str = "mock"):
        self.settings = settings
        self.library = library
        self.catalog = catalog
        self.codegen = CodeGenerator(
            gateway, library, backend_id=backend_id,
            similarity_threshold=settings.template_similarity_threshold,
        )

    # -- dataset staging ----------------------------------------------------

    def resolve_datasets(self, plan) -> dict:
        """alias -> ordered [(staging name, source path)]."""
        resolved = {}
        for selector in plan.datasets:
            rows = self.catalog.query_datasets(CatalogQuery(**selector.facets()))
            if not rows:
                raise DatasetResolutionFailure(
                    f"selector {selector.alias!r} matches no catalog rows"
                )
            model_counts: dict[str, int] = {}
            for d in rows:
                model_counts[d.source_model] = model_counts.get(d.source_model, 0) + 1
            files = []
            seen: dict[str, int] = {}
            for d in rows:
                name = d.source_model
                if model_counts[name] > 1:
                    seen[name] = seen.get(name, 0) + 1
                    name = f"{name}-{seen[d.source_model]}"
                files.append((name, self.catalog.resolve_descriptor(d)))
            resolved[selector.alias] = files
        return resolved

    def _apply_preprocessing(self, invocations, resolved, run_dir, sink):
        s = self.settings
        for alias in sorted(resolved):
            staged = []
            for name, path in resolved[alias]:
                current = path
                for inv in invocations:
                    step_ws = (Path(run_dir) / "preprocess" / alias / name /
                               f"{inv.step_index:02d}_{inv.tool}")
                    prepare_workspace(step_ws)
                    shutil.copy2(current, step_ws / "inputs" / "input.json")
                    result = run_tool(
                        inv, step_ws, input_rel="inputs/input.json",
                        output_name="step.json",
                        tools_dir=s.tool_scripts_dir, data_root=s.data_root,
                        timeout_s=s.exec_timeout_s,
                        output_cap_bytes=s.output_cap_bytes,
                    )
                    sink("tool_invoked", {
                        "alias": alias, "dataset": name, "tool": inv.tool,
                        "step_index": inv.step_index, "status": result.status,
                    })
                    if result.status != "ok":
                        raise PreprocessFailure(
                            f"{inv.tool} failed on {alias}/{name}: "
                            f"{result.stderr[-300:]}"
                        )
                    current = step_ws / "outputs" / "step.json"
                staged.append((name, current))
            resolved[alias] = staged
        return resolved

    def provision_task_workspace(self, task, run_dir, resolved) -> Path:
        ws = prepare_workspace(Path(run_dir) / "tasks" / task.id)
        params_inputs: dict[str, list] = {}
        for ref in task.inputs:
            if ref.startswith("dataset:"):
                alias = ref.split(":", 1)[1]
                dest_dir = ws / "inputs" / alias
                dest_dir.mkdir(parents=True, exist_ok=True)
                rels = []
                for name, path in resolved[alias]:
                    dest = dest_dir / f"{name}.json"
                    shutil.copy2(path, dest)
                    rels.append(str(dest.relative_to(ws)))
                params_inputs[ref] = sorted(rels)
            elif ref.startswith("task:"):
                _, dep_id, rel = ref.split(":", 2)
                src = Path(run_dir) / "tasks" / dep_id / rel
                dest_dir = ws / "inputs" / dep_id
                dest_dir.mkdir(parents=True, exist_ok=True)
                dest = dest_dir / Path(rel).name
                shutil.copy2(src, dest)
                params_inputs[ref] = [str(dest.relative_to(ws))]
        (ws / "params.json").write_text(
            json.dumps({"inputs": params_inputs}, indent=1, sort_keys=True),
            encoding="utf-8",
        )
        return ws

    # -- per-task pipeline ----------------------------------------------------

    def run_task(self, task, run_dir, resolved, plan, sink) -> TaskOutcome:
        s = self.settings
        ws = self.provision_task_workspace(task, run_dir, resolved)
        ws_rel = str(ws.relative_to(Path(run_dir)))

        artifact = self.codegen.generate_code(task, objective=plan.objective)
        sink("task_code_ready", {
            "task": task.id, "source": artifact.source,
            "revision": artifact.revision,
        })

        def execute(a):
            return execute_artifact(
                a, ws, tools_dir=s.tool_scripts_dir, data_root=s.data_root,
                timeout_s=s.exec_timeout_s,
                output_cap_bytes=s.output_cap_bytes,
            )

        def validate(result):
            return validate_outputs(result, task, ws, s.plausibility_ranges)

        def revise(t, a, problem):
            return self.codegen.revise_code(t, a, problem)

        def on_round(round_no, revised):
            sink("debug_round", {
                "task": task.id, "round": round_no, "cap": s.debug_round_cap,
                "revision": revised.revision,
            })

        sanitize = make_sanitizer(ws, s.tool_scripts_dir, s.data_root)
        first = execute(artifact)
        try:
            artifact, result, verdicts, transcript = run_debug_loop(
                task, artifact, first,
                execute=execute, revise=revise, validate=validate,
                cap=s.debug_round_cap, sanitize=sanitize, on_round=on_round,
            )
        except DebugExhausted as exc:
            (ws / "debug_transcript.json").write_text(
                json.dumps(exc.transcript.to_dict(), indent=1),
                encoding="utf-8",
            )
            return TaskOutcome(
                task.id, "failed", artifact=exc.last_artifact,
                result=exc.last_result, transcript=exc.transcript,
                error=str(exc), workspace=ws_rel,
            )
        (ws / "debug_transcript.json").write_text(
            json.dumps(transcript.to_dict(), indent=1), encoding="utf-8"
        )
        return TaskOutcome(task.id, "ok", artifact=artifact, result=result,
                           verdicts=verdicts, transcript=transcript,
                           workspace=ws_rel)

    # -- whole plan -----------------------------------------------------------

    def execute_plan(self, plan, run_dir, sink=_noop_sink,
                     run_ref: str = "") -> RunResults:
        run_dir = Path(run_dir)
        invocations = compile_preprocess(plan, self.library)
        resolved = self.resolve_datasets(plan)
        if invocations:
            resolved = self._apply_preprocessing(invocations, resolved,
                                                 run_dir, sink)
        graph = build_task_graph(plan)
        outcomes = schedule_run(
            graph,
            lambda task: self.run_task(task, run_dir, resolved, plan, sink),
            worker_count=self.settings.worker_count,
            sink=sink,
        )
        results = RunResults(outcomes=outcomes, order=graph.order())
        for tid in results.order:
            outcome = outcomes[tid]
            if outcome.status != "ok":
                continue
            manifest = outcome.result.result_manifest
            results.statistics[tid] = manifest.get("statistics", {})
            for fig in manifest.get("figures", []):
                results.figures.append((
                    tid,
                    f"{outcome.workspace}/{fig['path']}",
                    f"{outcome.workspace}/{fig.get('sidecar', '')}",
                ))
            if run_ref:
                ws = run_dir / outcome.workspace
                promote_on_success(graph.task(tid), self.library, ws,
                                   approval=None, run_ref=run_ref)
        return results
