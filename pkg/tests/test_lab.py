"""Execution layer: preprocessing, sandbox, debug loop, validation, scheduling."""

import json
import textwrap
from types import SimpleNamespace

import pytest

from climalab.catalog import MissingFile, load_catalog
from climalab.config import Settings
from climalab.errors import BackendFailure
from climalab.fixtures.catalogdata import MODELS, write_catalog
from climalab.gateway import Gateway, ModelResponse, hash_embedding
from climalab.gateway.backends import MockBackend
from climalab.lab import (
    CONVERSION_TABLE,
    CodeArtifact,
    CodeGenerator,
    CodeParseFailure,
    CycleDetected,
    DatasetResolutionFailure,
    DebugExhausted,
    DebugTranscript,
    ExecutionResult,
    LabRunner,
    NoToolForStep,
    PreprocessFailure,
    SandboxSetupFailure,
    UnknownUnitConversion,
    ValidationVerdict,
    build_task_graph,
    compile_preprocess,
    execute_artifact,
    failure_excerpt,
    make_sanitizer,
    output_digest,
    promote_on_success,
    retrieve_template,
    run_debug_loop,
    run_sandboxed,
    schedule_run,
    tool_doc_lines,
    validate_data,
    validate_figures,
    validate_outputs,
)
from climalab.lab.codegen import extract_script
from climalab.library import Library, TemplateRecord, ToolManifest
from climalab.planner import DatasetSelector, DiagnosticTask, Plan, PreprocessingStep

from conftest import SCRIPTS_DIR, load_json, run_script, write_grid_file


class StubBackend:
    def __init__(self, respond):
        self.respond = respond
        self.requests = []

    def complete(self, request):
        self.requests.append(request)
        return ModelResponse(text=self.respond(request), backend_id="stub")

    def embed(self, text, dim):
        return hash_embedding(text, dim)


def last_user(request) -> str:
    return [m.text for m in request.messages if m.role == "user"][-1]


def task_of(tid="t1", description="per-cell climatology", inputs=(),
            outputs=(), depends_on=()) -> DiagnosticTask:
    return DiagnosticTask(
        id=tid, description=description, method="mean",
        inputs=list(inputs), outputs=list(outputs),
        depends_on=list(depends_on),
    )


def plan_of(tasks, datasets=None, preprocessing=None) -> Plan:
    return Plan(
        objective="compare model output against observations",
        datasets=datasets or [],
        preprocessing=preprocessing or [],
        diagnostics=tasks,
        deliverables=["report"],
    )


def fenced(script: str) -> str:
    return "script follows\n```python\n" + script + "\n```\n"


# -- preprocessing compilation ------------------------------------------------


class TestPreprocess:
    def test_convert_units_binds_table_entry(self):
        step = PreprocessingStep(
            kind="convert_units",
            params={"from_units": "K", "target_units": "degC"},
        )
        lib = self._lib_with_tools()
        inv = compile_preprocess(plan_of([], preprocessing=[step]), lib)[0]
        assert inv.tool == "convert_units"
        assert inv.params == {
            "target_units": "degC", "scale": 1.0, "offset": -273.15,
        }
        assert inv.step_index == 0

    def test_convert_units_without_source_defers_to_tool(self):
        step = PreprocessingStep(kind="convert_units",
                                 params={"target_units": "degC"})
        inv = compile_preprocess(
            plan_of([], preprocessing=[step]), self._lib_with_tools()
        )[0]
        assert inv.params == {"target_units": "degC"}

    def test_convert_units_identity_pair(self):
        step = PreprocessingStep(
            kind="convert_units",
            params={"from_units": "K", "target_units": "K"},
        )
        inv = compile_preprocess(
            plan_of([], preprocessing=[step]), self._lib_with_tools()
        )[0]
        assert "scale" not in inv.params

    def test_convert_units_unknown_pair(self):
        step = PreprocessingStep(
            kind="convert_units",
            params={"from_units": "K", "target_units": "m/s"},
        )
        with pytest.raises(UnknownUnitConversion):
            compile_preprocess(plan_of([], preprocessing=[step]),
                               self._lib_with_tools())

    def test_convert_units_needs_target(self):
        step = PreprocessingStep(kind="convert_units", params={})
        with pytest.raises(UnknownUnitConversion):
            compile_preprocess(plan_of([], preprocessing=[step]),
                               self._lib_with_tools())

    def test_regrid_requires_target_counts(self):
        good = PreprocessingStep(kind="regrid",
                                 params={"target": {"lat": 4, "lon": 8}})
        inv = compile_preprocess(
            plan_of([], preprocessing=[good]), self._lib_with_tools()
        )[0]
        assert inv.params == {"target": {"lat": 4, "lon": 8}}
        bad = PreprocessingStep(kind="regrid", params={})
        with pytest.raises(NoToolForStep):
            compile_preprocess(plan_of([], preprocessing=[bad]),
                               self._lib_with_tools())

    def test_subset_needs_some_range(self):
        good = PreprocessingStep(kind="subset",
                                 params={"lat_range": [-30, 30]})
        inv = compile_preprocess(
            plan_of([], preprocessing=[good]), self._lib_with_tools()
        )[0]
        assert inv.params == {"lat_range": [-30, 30]}
        with pytest.raises(NoToolForStep):
            compile_preprocess(
                plan_of([], preprocessing=[
                    PreprocessingStep(kind="subset", params={})
                ]),
                self._lib_with_tools(),
            )

    def test_statistic_must_be_supported(self):
        good = PreprocessingStep(
            kind="statistic",
            params={"statistic": "anomaly", "baseline": [1985, 2014]},
        )
        inv = compile_preprocess(
            plan_of([], preprocessing=[good]), self._lib_with_tools()
        )[0]
        assert inv.params == {"statistic": "anomaly",
                              "baseline": [1985, 2014]}
        with pytest.raises(NoToolForStep):
            compile_preprocess(
                plan_of([], preprocessing=[
                    PreprocessingStep(kind="statistic",
                                      params={"statistic": "median"})
                ]),
                self._lib_with_tools(),
            )

    def test_unregistered_tool_is_rejected(self, tmp_path):
        gw = Gateway(embedding_dim=64)
        empty = Library(tmp_path / "lib.jsonl", embed=gw.embed)
        step = PreprocessingStep(kind="subset",
                                 params={"lat_range": [-10, 10]})
        with pytest.raises(NoToolForStep, match="not in the tool library"):
            compile_preprocess(plan_of([], preprocessing=[step]), empty)

    def test_steps_keep_plan_order(self):
        steps = [
            PreprocessingStep(kind="subset", params={"lat_range": [-10, 10]}),
            PreprocessingStep(kind="convert_units",
                              params={"target_units": "degC"}),
        ]
        invs = compile_preprocess(plan_of([], preprocessing=steps),
                                  self._lib_with_tools())
        assert [(i.tool, i.step_index) for i in invs] == [
            ("subset", 0), ("convert_units", 1),
        ]

    @pytest.mark.parametrize("pair,factors", sorted(CONVERSION_TABLE.items()))
    def test_bound_factors_match_the_tool(self, tmp_path, pair, factors):
        # The compile-time table and the tool's own table are separate
        # implementations; run the script on a unit probe to compare them.
        src, dst = pair
        scale, offset = factors
        ws = tmp_path / "ws"
        (ws / "inputs").mkdir(parents=True)
        (ws / "outputs").mkdir()
        write_grid_file(ws / "inputs" / "g.json", "x", src,
                        ["time"], {"time": [2000.5, 2001.5]}, [0.0, 1.0])
        proc = run_script("convert_units.py", ws, {
            "input": "inputs/g.json", "target_units": dst, "output": "c.json",
        })
        assert proc.returncode == 0, proc.stderr
        out = load_json(ws / "outputs" / "c.json")
        assert out["data"][0] == pytest.approx(offset)
        assert out["data"][1] == pytest.approx(scale + offset)
        assert out["header"]["units"] == dst

    @staticmethod
    def _lib_with_tools():
        import tempfile

        gw = Gateway(embedding_dim=64)
        lib = Library(tempfile.mkdtemp() + "/lib.jsonl", embed=gw.embed)
        for name in ("convert_units", "regrid", "subset", "statistic"):
            lib.register_tool(ToolManifest(
                name=name, entrypoint=str(SCRIPTS_DIR / f"{name}.py"),
                description=f"{name} preprocessing tool",
            ))
        return lib


# -- task graph ----------------------------------------------------------------


class TestGraph:
    def test_diamond_order(self):
        plan = plan_of([
            task_of("a"),
            task_of("b", depends_on=["a"]),
            task_of("c", depends_on=["a"]),
            task_of("d", depends_on=["b", "c"]),
        ])
        graph = build_task_graph(plan)
        order = graph.order()
        assert order.index("a") < order.index("b")
        assert order.index("a") < order.index("c")
        assert order.index("d") > max(order.index("b"), order.index("c"))

    def test_duplicate_id(self):
        with pytest.raises(CycleDetected, match="repeated"):
            build_task_graph(plan_of([task_of("a"), task_of("a")]))

    def test_unknown_dependency(self):
        with pytest.raises(CycleDetected, match="unknown"):
            build_task_graph(plan_of([task_of("a", depends_on=["ghost"])]))

    def test_cycle(self):
        plan = plan_of([
            task_of("a", depends_on=["b"]),
            task_of("b", depends_on=["a"]),
        ])
        with pytest.raises(CycleDetected, match="cycle"):
            build_task_graph(plan)


# -- sandbox --------------------------------------------------------------------


MANIFEST_FOOTER = """
import json
json.dump({"tool": "probe", "status": "ok", "outputs": [], "figures": [],
           "statistics": {}, "variable": "x", "units": "1",
           "warnings": []}, open("result.json", "w"))
"""


def probe(ws, body: str, manifest=False, **kwargs):
    script = ws.parent / "probe.py"
    text = textwrap.dedent(body) + (MANIFEST_FOOTER if manifest else "")
    script.write_text(text, encoding="utf-8")
    kwargs.setdefault("timeout_s", 30)
    return run_sandboxed(script, ws, **kwargs)


class TestSandbox:
    def test_ok_run_parses_manifest_and_lists_outputs(self, workspace):
        result = probe(workspace, """
            import json, os
            os.makedirs("outputs", exist_ok=True)
            open("outputs/a.txt", "w").write("hi")
        """, manifest=True)
        assert result.status == "ok"
        assert result.exit_code == 0
        assert result.result_manifest["tool"] == "probe"
        assert result.produced_files == ("outputs/a.txt", "result.json")

    def test_script_sees_contract_argv_cwd_and_env(self, workspace):
        result = probe(workspace, """
            import json, os, sys
            json.dump({"argv": sys.argv, "cwd": os.getcwd(),
                       "hashseed": os.environ.get("PYTHONHASHSEED")},
                      open("result.json", "w"))
        """)
        m = result.result_manifest
        assert m["argv"][1:] == ["--workspace", str(workspace.resolve())]
        assert m["argv"][0].endswith("probe.py")
        assert m["cwd"] == str(workspace.resolve())
        assert m["hashseed"] == "0"

    def test_tool_failure_exit_code_and_stderr(self, workspace):
        result = probe(workspace, """
            import sys
            print("ERROR InvalidSpec: nope", file=sys.stderr)
            sys.exit(2)
        """)
        assert result.status == "error"
        assert result.exit_code == 2
        assert "ERROR InvalidSpec: nope" in result.stderr

    def test_exit_zero_without_manifest_is_an_error(self, workspace):
        result = probe(workspace, "print('fine')\n")
        assert result.status == "error"
        assert "no parseable result.json" in result.stderr

    def test_timeout(self, workspace):
        result = probe(workspace, "import time\ntime.sleep(30)\n",
                       timeout_s=1.0)
        assert result.status == "timeout"
        assert result.result_manifest is None
        assert "[wall-clock timeout]" in result.stderr

    def test_output_capped_keeps_tail(self, workspace):
        result = probe(workspace, """
            import sys
            sys.stdout.write("x" * 200000 + "END")
        """, manifest=True, output_cap_bytes=1000)
        assert result.stdout.startswith("...[truncated]...")
        assert result.stdout.endswith("END")
        assert len(result.stdout) < 1200

    def test_write_outside_workspace_blocked(self, workspace):
        result = probe(workspace, """
            open("/tmp/sandbox-escape-probe.txt", "w").write("x")
        """)
        assert result.status == "error"
        assert "write outside workspace" in result.stderr

    def test_mkdir_outside_workspace_blocked(self, workspace):
        result = probe(workspace, """
            import os
            os.mkdir("/tmp/sandbox-mkdir-probe")
        """)
        assert result.status == "error"
        assert "os.mkdir outside workspace" in result.stderr

    def test_read_outside_roots_blocked(self, workspace):
        result = probe(workspace, """
            open("/etc/passwd").read()
        """)
        assert result.status == "error"
        assert "read not allowed" in result.stderr

    def test_subprocess_blocked(self, workspace):
        result = probe(workspace, """
            import subprocess, sys
            subprocess.run([sys.executable, "-c", "pass"])
        """)
        assert result.status == "error"
        assert "subprocess.Popen is blocked" in result.stderr

    def test_network_blocked(self, workspace):
        result = probe(workspace, """
            import socket
            socket.getaddrinfo("localhost", 80)
        """)
        assert result.status == "error"
        assert "network access is blocked" in result.stderr

    def test_tool_modules_importable_and_data_root_readable(self, workspace, tmp_path):
        data_root = tmp_path / "datastore"
        data_root.mkdir()
        (data_root / "blob.json").write_text("[1]", encoding="utf-8")
        result = probe(workspace, """
            import json, _gridio
            body = json.load(open(%r))
            assert body == [1]
            assert hasattr(_gridio, "read_grid")
        """ % str(tmp_path / "datastore" / "blob.json"), manifest=True,
            tools_dir=str(SCRIPTS_DIR), data_root=str(data_root))
        assert result.status == "ok", result.stderr

    def test_workspace_without_outputs_dir(self, tmp_path):
        ws = tmp_path / "bare"
        ws.mkdir()
        script = tmp_path / "s.py"
        script.write_text("pass", encoding="utf-8")
        with pytest.raises(SandboxSetupFailure, match="outputs"):
            run_sandboxed(script, ws)

    def test_missing_script(self, workspace, tmp_path):
        with pytest.raises(SandboxSetupFailure, match="does not exist"):
            run_sandboxed(tmp_path / "ghost.py", workspace)

    def test_execute_artifact_writes_script(self, workspace):
        artifact = CodeArtifact(task_id="t1",
                                script_text="x = 1\n" + MANIFEST_FOOTER)
        result = execute_artifact(artifact, workspace)
        assert result.status == "ok"
        assert (workspace / "script.py").read_text(
            encoding="utf-8").startswith("x = 1")


# -- debug loop -------------------------------------------------------------


def ok_result(manifest=None):
    return ExecutionResult("ok", 0, "", "", (), manifest or {"status": "ok"})


def err_result(stderr="boom", status="error"):
    return ExecutionResult(status, 1, "", stderr)


def green(_result):
    return (ValidationVerdict("data", True), ValidationVerdict("figure", True))


class TestDebugLoop:
    def test_converges_after_execution_failures(self):
        task = task_of()
        problems = []

        def execute(a):
            return ok_result() if a.revision >= 2 else err_result(f"rev {a.revision} broke")

        def revise(t, a, problem):
            problems.append(problem)
            return a.revised(a.script_text + "#")

        a0 = CodeArtifact(task_id="t1", script_text="pass")
        artifact, result, verdicts, transcript = run_debug_loop(
            task, a0, execute(a0), execute=execute, revise=revise,
            validate=green, cap=15,
        )
        assert artifact.revision == 2
        assert result.status == "ok"
        assert all(v.passed for v in verdicts)
        assert [r.round_no for r in transcript.rounds] == [1, 2]
        assert problems == ["rev 0 broke", "rev 1 broke"]

    def test_validation_rejection_reenters_same_loop(self):
        task = task_of()
        problems = []

        def validate(result):
            # findings clear once the second revision lands
            if problems and "MissingUnits" in problems[-1]:
                return green(result)
            return (
                ValidationVerdict("data", False,
                                  (("MissingUnits", "no units declared"),)),
                ValidationVerdict("figure", True),
            )

        def revise(t, a, problem):
            problems.append(problem)
            return a.revised(a.script_text)

        a0 = CodeArtifact(task_id="t1", script_text="pass")
        artifact, _result, _verdicts, transcript = run_debug_loop(
            task, a0, ok_result(), execute=lambda a: ok_result(),
            revise=revise, validate=validate, cap=15,
        )
        assert artifact.revision == 1
        assert len(transcript.rounds) == 1
        assert problems[0].startswith("validation failed:")
        assert "data MissingUnits: no units declared" in problems[0]

    def test_mixed_failures_share_one_cap(self):
        # one execution failure, then one validation failure: two rounds
        # against the same budget, converging exactly at cap=2
        task = task_of()
        state = {"validated": 0}

        def execute(a):
            return err_result("syntax") if a.revision == 0 else ok_result()

        def validate(result):
            state["validated"] += 1
            if state["validated"] == 1:
                return (ValidationVerdict(
                    "data", False, (("MissingOutput", "absent"),)),)
            return green(result)

        a0 = CodeArtifact(task_id="t1", script_text="pass")
        *_, transcript = run_debug_loop(
            task, a0, execute(a0), execute=execute,
            revise=lambda t, a, p: a.revised(a.script_text),
            validate=validate, cap=2,
        )
        assert len(transcript.rounds) == 2

        with pytest.raises(DebugExhausted):
            state["validated"] = 0
            run_debug_loop(
                task, a0, execute(a0), execute=execute,
                revise=lambda t, a, p: a.revised(a.script_text),
                validate=validate, cap=1,
            )

    def test_exhaustion_carries_transcript_and_last_state(self):
        task = task_of()
        a0 = CodeArtifact(task_id="t1", script_text="pass")
        with pytest.raises(DebugExhausted, match="after 2 repair rounds") as exc_info:
            run_debug_loop(
                task, a0, err_result(), execute=lambda a: err_result(),
                revise=lambda t, a, p: a.revised(a.script_text),
                validate=green, cap=2,
            )
        exc = exc_info.value
        assert len(exc.transcript.rounds) == 2
        assert exc.last_artifact.revision == 2
        assert exc.last_result.status == "error"
        assert exc.details["rounds"] == 2

    def test_sanitizer_applied_to_execution_problems_only(self):
        task = task_of()
        seen = []

        def execute(a):
            return err_result("/home/user/run/ws/script.py exploded") \
                if a.revision == 0 else ok_result()

        run_debug_loop(
            task, CodeArtifact(task_id="t1", script_text="p"),
            execute(CodeArtifact(task_id="t1", script_text="p")),
            execute=execute,
            revise=lambda t, a, p: seen.append(p) or a.revised("q"),
            validate=green, cap=5,
            sanitize=lambda s: s.replace("/home/user/run/ws", "<workspace>"),
        )
        assert seen == ["<workspace>/script.py exploded"]

    def test_on_round_observer(self):
        task = task_of()
        rounds = []
        run_debug_loop(
            task, CodeArtifact(task_id="t1", script_text="p"), err_result(),
            execute=lambda a: ok_result() if a.revision >= 2 else err_result(),
            revise=lambda t, a, p: a.revised("q"),
            validate=green, cap=5,
            on_round=lambda n, a: rounds.append((n, a.revision)),
        )
        assert rounds == [(1, 1), (2, 2)]

    def test_transcript_excerpts_are_clipped(self):
        task = task_of()
        *_, transcript = run_debug_loop(
            task, CodeArtifact(task_id="t1", script_text="p"),
            err_result("x" * 3000),
            execute=lambda a: ok_result(),
            revise=lambda t, a, p: a.revised("q"),
            validate=green, cap=5,
        )
        assert len(transcript.rounds[0].error_excerpt) <= 500

    def test_transcript_append_cap(self):
        tr = DebugTranscript("t1", cap=1)
        tr.append("a", 1)
        with pytest.raises(ValueError):
            tr.append("b", 2)

    def test_timeout_excerpt_names_the_timeout(self):
        text = failure_excerpt(err_result("late", status="timeout"))
        assert text.startswith("execution hit the wall-clock timeout")

    def test_sanitizer_drops_interpreter_frames(self):
        clean = make_sanitizer("/w", "/t", "/d")(
            'Traceback\n  File "/usr/lib/python3.10/runpy.py", line 1\n'
            "ValueError: /w/inputs/a.json missing"
        )
        assert "runpy" not in clean
        assert "<workspace>/inputs/a.json missing" in clean


# -- output validation -------------------------------------------------------


RANGES = {"tas|K": [170.0, 340.0]}


def manifest_doc(**kw):
    doc = {"tool": "t", "status": "ok", "outputs": [], "figures": [],
           "statistics": {}, "variable": "tas", "units": "K",
           "warnings": []}
    doc.update(kw)
    return doc


def ok_exec(manifest):
    return ExecutionResult("ok", 0, "", "", (), manifest)


def codes(verdict):
    return [c for c, _ in verdict.findings]


class TestValidateData:
    def test_all_green(self, workspace):
        write_grid_file(workspace / "outputs" / "a.json", "tas", "K",
                        ["time"], {"time": [2000.5]}, [288.0])
        task = task_of(outputs=["outputs/a.json"])
        result = ok_exec(manifest_doc(
            outputs=[{"path": "outputs/a.json", "kind": "grid"}],
            statistics={"global_mean": 288.0},
        ))
        verdict = validate_data(result, task, workspace, RANGES)
        assert verdict.passed, verdict.findings

    def test_missing_manifest(self, workspace):
        result = ExecutionResult("error", 1, "", "x")
        verdict = validate_data(result, task_of(), workspace, RANGES)
        assert codes(verdict) == ["MissingManifest"]

    def test_plan_declared_output_must_exist(self, workspace):
        task = task_of(outputs=["outputs/needed.json"])
        verdict = validate_data(ok_exec(manifest_doc()), task, workspace,
                                RANGES)
        assert "MissingOutput" in codes(verdict)

    def test_manifest_output_declared_but_absent(self, workspace):
        result = ok_exec(manifest_doc(
            outputs=[{"path": "outputs/gone.json", "kind": "grid"}]))
        verdict = validate_data(result, task_of(), workspace, RANGES)
        assert "MissingOutput" in codes(verdict)

    def test_escaping_path_rejected(self, workspace):
        result = ok_exec(manifest_doc(
            outputs=[{"path": "../../etc/passwd", "kind": "grid"}]))
        verdict = validate_data(result, task_of(), workspace, RANGES)
        assert "MissingOutput" in codes(verdict)

    def test_non_finite_grid_value(self, workspace):
        write_grid_file(workspace / "outputs" / "a.json", "tas", "K",
                        ["time"], {"time": [2000.5]}, [float("nan")])
        result = ok_exec(manifest_doc(
            outputs=[{"path": "outputs/a.json", "kind": "grid"}]))
        verdict = validate_data(result, task_of(), workspace, RANGES)
        assert "NonFiniteValue" in codes(verdict)

    def test_fill_value_cells_are_exempt(self, workspace):
        doc = {"header": {"variable": "tas", "units": "K",
                          "dims": ["time"], "coords": {"time": [2000.5, 2001.5]},
                          "fill_value": -999.0},
               "data": [-999.0, 288.0]}
        path = workspace / "outputs" / "a.json"
        path.parent.mkdir(exist_ok=True)
        path.write_text(json.dumps(doc), encoding="utf-8")
        result = ok_exec(manifest_doc(
            outputs=[{"path": "outputs/a.json", "kind": "grid"}]))
        verdict = validate_data(result, task_of(), workspace, RANGES)
        assert verdict.passed, verdict.findings

    def test_implausible_value_flagged_with_range(self, workspace):
        write_grid_file(workspace / "outputs" / "a.json", "tas", "K",
                        ["time"], {"time": [2000.5]}, [50.0])
        result = ok_exec(manifest_doc(
            outputs=[{"path": "outputs/a.json", "kind": "grid"}]))
        verdict = validate_data(result, task_of(), workspace, RANGES)
        assert "ImplausibleValue" in codes(verdict)
        assert "tas [K]" in dict(verdict.findings)["ImplausibleValue"]

    def test_unknown_variable_units_pair_skips_plausibility(self, workspace):
        write_grid_file(workspace / "outputs" / "a.json", "zg", "m",
                        ["time"], {"time": [2000.5]}, [1e7])
        result = ok_exec(manifest_doc(
            outputs=[{"path": "outputs/a.json", "kind": "grid"}], units="m"))
        verdict = validate_data(result, task_of(), workspace, RANGES)
        assert verdict.passed

    def test_unreadable_output(self, workspace):
        path = workspace / "outputs" / "bad.json"
        path.parent.mkdir(exist_ok=True)
        path.write_text("definitely not json", encoding="utf-8")
        result = ok_exec(manifest_doc(
            outputs=[{"path": "outputs/bad.json", "kind": "grid"}]))
        verdict = validate_data(result, task_of(), workspace, RANGES)
        assert "UnreadableOutput" in codes(verdict)

    def test_non_grid_outputs_not_parsed(self, workspace):
        path = workspace / "outputs" / "notes.txt"
        path.parent.mkdir(exist_ok=True)
        path.write_text("free text", encoding="utf-8")
        result = ok_exec(manifest_doc(
            outputs=[{"path": "outputs/notes.txt", "kind": "text"}]))
        assert validate_data(result, task_of(), workspace, RANGES).passed

    def test_missing_units(self, workspace):
        verdict = validate_data(ok_exec(manifest_doc(units="  ")),
                                task_of(), workspace, RANGES)
        assert codes(verdict) == ["MissingUnits"]

    def test_non_finite_statistic(self, workspace):
        verdict = validate_data(
            ok_exec(manifest_doc(statistics={"rmse": float("inf")})),
            task_of(), workspace, RANGES,
        )
        assert "NonFiniteValue" in codes(verdict)
        assert any("statistics.rmse" in msg for _, msg in verdict.findings)


class TestValidateFigures:
    def _result(self, workspace, svg=True, sidecar=True, meta=None,
                empty=False):
        outputs = workspace / "outputs"
        outputs.mkdir(exist_ok=True)
        if svg:
            body = "" if empty else "<svg xmlns='http://www.w3.org/2000/svg'/>"
            (outputs / "f.svg").write_text(body, encoding="utf-8")
        if sidecar:
            doc = meta if meta is not None else {
                "title": "Bias", "xlabel": "lon", "ylabel": "lat",
                "units": "K",
            }
            (outputs / "f.svg.meta.json").write_text(json.dumps(doc),
                                                     encoding="utf-8")
        return ok_exec(manifest_doc(figures=[{
            "path": "outputs/f.svg", "sidecar": "outputs/f.svg.meta.json",
        }]))

    def test_complete_figure_passes(self, workspace):
        verdict = validate_figures(self._result(workspace), workspace)
        assert verdict.passed, verdict.findings

    def test_missing_figure_file(self, workspace):
        verdict = validate_figures(self._result(workspace, svg=False),
                                   workspace)
        assert codes(verdict) == ["MissingFigure"]

    def test_empty_figure(self, workspace):
        verdict = validate_figures(self._result(workspace, empty=True),
                                   workspace)
        assert "EmptyFigure" in codes(verdict)

    def test_missing_sidecar(self, workspace):
        verdict = validate_figures(self._result(workspace, sidecar=False),
                                   workspace)
        assert "MissingSidecar" in codes(verdict)

    def test_incomplete_sidecar(self, workspace):
        verdict = validate_figures(
            self._result(workspace, meta={"title": "Bias", "xlabel": "lon"}),
            workspace,
        )
        found = codes(verdict)
        assert found.count("IncompleteSidecar") == 2  # ylabel and units

    def test_validate_outputs_returns_both_verdicts(self, workspace):
        data, figure = validate_outputs(ok_exec(manifest_doc()), task_of(),
                                        workspace, RANGES)
        assert data.validator == "data"
        assert figure.validator == "figure"


# -- code generation -----------------------------------------------------------


def make_codegen(respond, tmp_path, threshold=0.92):
    gw = Gateway(embedding_dim=64)
    stub = StubBackend(respond)
    gw.register("mock", stub)
    lib = Library(tmp_path / "lib.jsonl", embed=gw.embed)
    gen = CodeGenerator(gw, lib, backend_id="mock",
                        similarity_threshold=threshold)
    return gen, stub, lib


def approval(run="run-1"):
    return SimpleNamespace(approved=True, run_ref=run)


class TestCodegen:
    def test_extract_script_variants(self):
        assert extract_script("```python\nx = 1\n```") == "x = 1\n"
        assert extract_script("```py\nx = 2\n```") == "x = 2\n"
        assert extract_script("```\nx = 3\n```") == "x = 3\n"
        for bad in ("no fence", "```python\n\n```"):
            with pytest.raises(ValueError):
                extract_script(bad)

    def test_tool_doc_lines_sorted_by_name(self, tmp_path):
        _gen, _stub, lib = make_codegen(lambda r: fenced("pass"), tmp_path)
        lib.register_tool(ToolManifest(name="subset",
                                       entrypoint=str(SCRIPTS_DIR / "subset.py"),
                                       description="regional cut"))
        lib.register_tool(ToolManifest(name="regrid",
                                       entrypoint=str(SCRIPTS_DIR / "regrid.py"),
                                       description="grid interpolation"))
        assert tool_doc_lines(lib) == [
            "regrid: grid interpolation",
            "subset: regional cut",
        ]

    def test_generated_source_without_template(self, tmp_path):
        gen, stub, lib = make_codegen(lambda r: fenced("print('hi')"),
                                      tmp_path)
        lib.register_tool(ToolManifest(name="regrid",
                                       entrypoint=str(SCRIPTS_DIR / "regrid.py"),
                                       description="grid interpolation"))
        artifact = gen.generate_code(task_of(), objective="obj")
        assert artifact.source == "generated"
        assert artifact.revision == 0
        assert artifact.script_text == "print('hi')\n"
        prompt = last_user(stub.requests[0])
        assert prompt.startswith("[generate-code]")
        assert "objective: obj" in prompt
        assert "* regrid: grid interpolation" in prompt
        assert "reference template" not in prompt

    def test_matching_template_switches_source(self, tmp_path):
        desc = "per-cell climatology of surface air temperature"
        gen, stub, lib = make_codegen(lambda r: fenced("adapted = True"),
                                      tmp_path)
        lib.promote_template(
            TemplateRecord(query_text=desc, code="seed_code()",
                           result_digest="d" * 8),
            approval(),
        )
        artifact = gen.generate_code(task_of(description=desc))
        assert artifact.source == "template_adapted"
        prompt = last_user(stub.requests[0])
        assert "reference template (adapt to this task):" in prompt
        assert "seed_code()" in prompt

    def test_dissimilar_template_stays_generated(self, tmp_path):
        gen, _stub, lib = make_codegen(lambda r: fenced("pass"), tmp_path)
        lib.promote_template(
            TemplateRecord(query_text="wavelet spectrum of ENSO indices",
                           code="other()", result_digest="d" * 8),
            approval(),
        )
        code, score = retrieve_template(
            lib, "per-cell climatology of surface air temperature", 0.92)
        assert code is None
        assert score < 0.92
        artifact = gen.generate_code(task_of())
        assert artifact.source == "generated"

    def test_draft_templates_are_invisible(self, tmp_path):
        desc = "per-cell climatology of surface air temperature"
        gen, _stub, lib = make_codegen(lambda r: fenced("pass"), tmp_path)
        lib.queue_draft(
            TemplateRecord(query_text=desc, code="draft()",
                           result_digest="d" * 8),
            run_ref="run-9",
        )
        assert retrieve_template(lib, desc, 0.92) == (None, 0.0)
        assert gen.generate_code(task_of(description=desc)).source == "generated"

    def test_reprompt_once_then_parse(self, tmp_path):
        replies = iter(["no fence in sight", fenced("fixed = 1")])
        gen, stub, _lib = make_codegen(lambda r: next(replies), tmp_path)
        artifact = gen.generate_code(task_of())
        assert artifact.script_text == "fixed = 1\n"
        assert len(stub.requests) == 2
        assert "previous attempt invalid:" in last_user(stub.requests[1])

    def test_two_bad_replies_raise(self, tmp_path):
        gen, stub, _lib = make_codegen(lambda r: "still prose", tmp_path)
        with pytest.raises(CodeParseFailure, match="t1"):
            gen.generate_code(task_of())
        assert len(stub.requests) == 2

    def test_revise_builds_debug_prompt(self, tmp_path):
        gen, stub, _lib = make_codegen(lambda r: fenced("better = 1"),
                                       tmp_path)
        base = CodeArtifact(task_id="t1", script_text="worse = 0")
        revised = gen.revise_code(task_of(), base, "KeyError: 'data'")
        assert revised.revision == 1
        assert revised.script_text == "better = 1\n"
        prompt = last_user(stub.requests[0])
        assert prompt.startswith("[debug-code]")
        assert "revision: 1" in prompt
        assert "KeyError: 'data'" in prompt
        assert "worse = 0" in prompt

    def test_revise_does_not_reprompt(self, tmp_path):
        gen, stub, _lib = make_codegen(lambda r: "prose", tmp_path)
        base = CodeArtifact(task_id="t1", script_text="x")
        with pytest.raises(CodeParseFailure, match="revision 1"):
            gen.revise_code(task_of(), base, "err")
        assert len(stub.requests) == 1

    def test_fixture_miss_becomes_backend_failure(self, tmp_path):
        gw = Gateway(embedding_dim=64)
        gw.register("mock", MockBackend("mock", tmp_path / "empty"))
        lib = Library(tmp_path / "lib.jsonl", embed=gw.embed)
        gen = CodeGenerator(gw, lib, backend_id="mock")
        with pytest.raises(BackendFailure):
            gen.generate_code(task_of())


# -- scheduler -------------------------------------------------------------


class TestScheduler:
    DIAMOND = [
        task_of("a"),
        task_of("b", depends_on=["a"]),
        task_of("c", depends_on=["a"]),
        task_of("d", depends_on=["b", "c"]),
    ]

    @staticmethod
    def run_diamond(run_task, workers=2, sink=None):
        graph = build_task_graph(plan_of(TestScheduler.DIAMOND))
        events = []
        outcomes = schedule_run(
            graph, run_task, worker_count=workers,
            sink=sink or (lambda t, p: events.append((t, p))),
        )
        return outcomes, events

    def test_ordering_invariant(self):
        from climalab.lab import TaskOutcome

        outcomes, events = self.run_diamond(
            lambda task: TaskOutcome(task.id, "ok"))
        assert {o.status for o in outcomes.values()} == {"ok"}

        started_d = next(i for i, (t, p) in enumerate(events)
                         if t == "task_started" and p["task"] == "d")
        for dep in ("b", "c"):
            validated = next(i for i, (t, p) in enumerate(events)
                             if t == "task_validated" and p["task"] == dep)
            assert validated < started_d

    def test_failure_skips_dependents_but_not_siblings(self):
        from climalab.lab import TaskOutcome

        def run(task):
            if task.id == "b":
                return TaskOutcome(task.id, "failed", error="no data")
            return TaskOutcome(task.id, "ok")

        outcomes, events = self.run_diamond(run)
        assert outcomes["a"].status == "ok"
        assert outcomes["c"].status == "ok"
        assert outcomes["b"].status == "failed"
        assert outcomes["d"].status == "skipped"
        assert "b" in outcomes["d"].error
        skip_events = [p for t, p in events if t == "task_skipped"]
        assert skip_events == [{"task": "d", "blocked_on": ["b"]}]

    def test_leaked_exception_recorded_as_failure(self):
        def run(task):
            if task.id == "a":
                raise RuntimeError("boom a")
            pytest.fail("dependents must not run")

        outcomes, _ = self.run_diamond(run)
        assert outcomes["a"].status == "failed"
        assert "boom a" in outcomes["a"].error
        assert all(outcomes[t].status == "skipped" for t in ("b", "c", "d"))

    def test_worker_count_validation(self):
        graph = build_task_graph(plan_of([task_of("a")]))
        with pytest.raises(ValueError):
            schedule_run(graph, lambda t: None, worker_count=0)

    @pytest.mark.parametrize("workers", [1, 2, 4])
    def test_statuses_stable_across_worker_counts(self, workers):
        from climalab.lab import TaskOutcome

        def run(task):
            if task.id == "c":
                return TaskOutcome(task.id, "failed", error="x")
            return TaskOutcome(task.id, "ok")

        outcomes, _ = self.run_diamond(run, workers=workers)
        assert {t: o.status for t, o in outcomes.items()} == {
            "a": "ok", "b": "ok", "c": "failed", "d": "skipped",
        }


# -- full pipeline ---------------------------------------------------------


PIPE_SCRIPT = textwrap.dedent("""\
    import json, os

    params = json.load(open("params.json"))
    rels = []
    for ref in sorted(params["inputs"]):
        rels.extend(params["inputs"][ref])
    docs = [json.load(open(rel)) for rel in rels]
    values = [v for doc in docs for v in doc["data"]]
    mean = sum(values) / len(values)
    first = docs[0]
    os.makedirs("outputs", exist_ok=True)
    json.dump({"header": first["header"], "data": first["data"]},
              open("outputs/out.json", "w"))
    json.dump({
        "tool": "scripted", "status": "ok",
        "outputs": [{"path": "outputs/out.json", "kind": "grid"}],
        "figures": [],
        "statistics": {"mean": mean, "files": len(rels)},
        "variable": first["header"]["variable"],
        "units": first["header"]["units"],
        "warnings": [],
    }, open("result.json", "w"))
""")

BROKEN_SCRIPT = 'raise RuntimeError("kaput")\n'


def scripted(script):
    def respond(request):
        head = last_user(request).splitlines()[0]
        assert head in ("[generate-code]", "[debug-code]")
        return fenced(script)

    return respond


def build_home(tmp_path, respond, **overrides):
    home = tmp_path / "home"
    catalog_path = write_catalog(home / "catalog" / "catalog.jsonl")
    data_root = home / "catalog" / "data"
    for i, model in enumerate(MODELS):
        write_grid_file(
            data_root / "CMIP" / "historical" / model / "tas_annual.json",
            "tas", "K", ["time", "lat", "lon"],
            {"time": [2000.5], "lat": [0.0], "lon": [0.0, 180.0]},
            [285.0 + i, 291.0],
        )
    catalog = load_catalog(catalog_path)

    gw = Gateway(embedding_dim=64)
    gw.register("mock", StubBackend(respond))
    lib = Library(home / "library" / "records.jsonl", embed=gw.embed)
    lib.register_tool(ToolManifest(
        name="convert_units",
        entrypoint=str(SCRIPTS_DIR / "convert_units.py"),
        description="unit conversion",
    ))

    kwargs = dict(
        home=str(home), embedding_dim=64, data_root=str(data_root),
        tool_scripts_dir=str(SCRIPTS_DIR), debug_round_cap=2,
        exec_timeout_s=60.0, worker_count=2,
    )
    kwargs.update(overrides)
    settings = Settings(**kwargs).resolved()
    return LabRunner(settings, gw, lib, catalog), lib


def two_task_plan(preprocessing=None):
    return plan_of(
        [
            task_of("clim", description="multi-model mean climatology",
                    inputs=["dataset:sim"], outputs=["outputs/out.json"]),
            task_of("bias", description="bias against the reference",
                    inputs=["task:clim:outputs/out.json"],
                    outputs=["outputs/out.json"], depends_on=["clim"]),
        ],
        datasets=[DatasetSelector(alias="sim", experiment="historical",
                                  variable="tas", frequency="annual")],
        preprocessing=preprocessing if preprocessing is not None else [
            PreprocessingStep(kind="convert_units",
                              params={"from_units": "K",
                                      "target_units": "degC"}),
        ],
    )


class TestPipeline:
    def test_happy_path(self, tmp_path):
        runner, lib = build_home(tmp_path, scripted(PIPE_SCRIPT))
        events = []
        run_dir = tmp_path / "run1"
        results = runner.execute_plan(
            two_task_plan(), run_dir,
            sink=lambda t, p: events.append((t, p)), run_ref="run-42",
        )
        assert results.ok
        assert results.order == ["clim", "bias"]

        # five catalog files each through one conversion step
        tool_events = [p for t, p in events if t == "tool_invoked"]
        assert len(tool_events) == 5
        assert {p["status"] for p in tool_events} == {"ok"}

        # converted means: raw K values shifted to degC
        raw = [285.0 + i for i in range(5)] + [291.0] * 5
        expected = sum(raw) / len(raw) - 273.15
        assert results.statistics["clim"]["mean"] == pytest.approx(expected)
        assert results.statistics["clim"]["files"] == 5

        params = load_json(run_dir / "tasks" / "clim" / "params.json")
        rels = params["inputs"]["dataset:sim"]
        assert len(rels) == 5
        assert rels == sorted(rels)
        assert all(rel.startswith("inputs/sim/") for rel in rels)

        bias_params = load_json(run_dir / "tasks" / "bias" / "params.json")
        assert bias_params["inputs"] == {
            "task:clim:outputs/out.json": ["inputs/clim/out.json"],
        }

        sources = {p["task"]: p["source"] for t, p in events
                   if t == "task_code_ready"}
        assert sources == {"clim": "generated", "bias": "generated"}

        drafts = lib.list_records(kind="template", status="draft")
        assert len(drafts) == 2
        assert {d.run_ref for d in drafts} == {"run-42"}
        assert lib.list_records(kind="template", status="validated") == []

        assert results.outcomes["clim"].workspace == "tasks/clim"
        transcript = load_json(run_dir / "tasks" / "clim" /
                               "debug_transcript.json")
        assert transcript["rounds"] == []

    def test_outputs_reproducible_across_runs(self, tmp_path):
        runner, _lib = build_home(tmp_path, scripted(PIPE_SCRIPT))
        plan = two_task_plan()
        runner.execute_plan(plan, tmp_path / "run1")
        runner.execute_plan(plan, tmp_path / "run2")
        for tid in ("clim", "bias"):
            d1 = output_digest(tmp_path / "run1" / "tasks" / tid)
            d2 = output_digest(tmp_path / "run2" / "tasks" / tid)
            assert d1 == d2

    def test_promoted_template_changes_attribution(self, tmp_path):
        runner, lib = build_home(tmp_path, scripted(PIPE_SCRIPT))
        plan = two_task_plan()
        results = runner.execute_plan(plan, tmp_path / "run1")
        assert results.ok

        record_id = promote_on_success(
            plan.diagnostics[0], lib,
            tmp_path / "run1" / "tasks" / "clim",
            approval=SimpleNamespace(approved=True, run_ref="run-1"),
        )
        assert lib.get(record_id).status == "validated"

        events = []
        runner.execute_plan(plan, tmp_path / "run2",
                            sink=lambda t, p: events.append((t, p)))
        sources = {p["task"]: p["source"] for t, p in events
                   if t == "task_code_ready"}
        assert sources["clim"] == "template_adapted"
        assert sources["bias"] == "generated"

    def test_failing_task_exhausts_cap_and_skips_dependents(self, tmp_path):
        runner, _lib = build_home(tmp_path, scripted(BROKEN_SCRIPT))
        events = []
        run_dir = tmp_path / "run1"
        results = runner.execute_plan(
            two_task_plan(preprocessing=[]), run_dir,
            sink=lambda t, p: events.append((t, p)),
        )
        assert not results.ok
        assert results.failed_tasks() == ["clim"]
        assert results.outcomes["clim"].status == "failed"
        assert "after 2 repair rounds" in results.outcomes["clim"].error
        assert results.outcomes["bias"].status == "skipped"

        transcript = load_json(run_dir / "tasks" / "clim" /
                               "debug_transcript.json")
        assert len(transcript["rounds"]) == 2
        assert "kaput" in transcript["rounds"][0]["error_excerpt"]
        rounds = [p for t, p in events if t == "debug_round"]
        assert [p["round"] for p in rounds] == [1, 2]
        failed = [p["task"] for t, p in events if t == "task_failed"]
        assert failed == ["clim"]

    def test_selector_matching_nothing(self, tmp_path):
        runner, _lib = build_home(tmp_path, scripted(PIPE_SCRIPT))
        plan = plan_of(
            [task_of("clim", inputs=["dataset:sim"],
                     outputs=["outputs/out.json"])],
            datasets=[DatasetSelector(alias="sim", variable="tos",
                                      frequency="annual")],
        )
        with pytest.raises(DatasetResolutionFailure):
            runner.execute_plan(plan, tmp_path / "run1")

    def test_missing_data_file_surfaces(self, tmp_path):
        runner, _lib = build_home(tmp_path, scripted(PIPE_SCRIPT))
        plan = plan_of(
            [task_of("clim", inputs=["dataset:sim"],
                     outputs=["outputs/out.json"])],
            datasets=[DatasetSelector(alias="sim", experiment="historical",
                                      variable="tas", frequency="monthly")],
        )
        with pytest.raises(MissingFile):
            runner.execute_plan(plan, tmp_path / "run1")

    def test_preprocess_runtime_failure(self, tmp_path):
        # compile-time binding promises K->degC but the staged file is
        # already degC-incompatible; the tool's own check must surface
        runner, _lib = build_home(tmp_path, scripted(PIPE_SCRIPT))
        data_root = tmp_path / "home" / "catalog" / "data"
        write_grid_file(
            data_root / "CMIP" / "historical" / "CanESM5" / "pr_annual.json",
            "pr", "mm/day", ["time"], {"time": [2000.5]}, [3.0],
        )
        plan = plan_of(
            [task_of("clim", inputs=["dataset:sim"],
                     outputs=["outputs/out.json"])],
            datasets=[DatasetSelector(alias="sim", experiment="historical",
                                      source_model="CanESM5", variable="pr",
                                      frequency="annual")],
            preprocessing=[PreprocessingStep(
                kind="convert_units",
                params={"from_units": "K", "target_units": "degC"},
            )],
        )
        with pytest.raises(PreprocessFailure, match="convert_units failed"):
            runner.execute_plan(plan, tmp_path / "run1")

    def test_output_digest_ignores_scratch_outside_outputs(self, tmp_path):
        ws = tmp_path / "ws"
        (ws / "outputs").mkdir(parents=True)
        (ws / "outputs" / "a.json").write_text("{}", encoding="utf-8")
        before = output_digest(ws)
        (ws / "scratch.log").write_text("noise", encoding="utf-8")
        assert output_digest(ws) == before
        (ws / "outputs" / "b.json").write_text("{}", encoding="utf-8")
        assert output_digest(ws) != before
