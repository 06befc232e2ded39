"""Sandboxed analysis execution: codegen, debug loop, validation, scheduling."""

from climalab.lab.codegen import (
    CodeGenerator,
    CodeParseFailure,
    retrieve_template,
    tool_doc_lines,
)
from climalab.lab.debug import (
    DebugExhausted,
    failure_excerpt,
    make_sanitizer,
    run_debug_loop,
    verdict_excerpt,
)
from climalab.lab.graph import CycleDetected, build_task_graph
from climalab.lab.pipeline import (
    DatasetResolutionFailure,
    LabRunner,
    PreprocessFailure,
    build_triplet,
    output_digest,
    promote_on_success,
)
from climalab.lab.preprocess import (
    CONVERSION_TABLE,
    NoToolForStep,
    UnknownUnitConversion,
    compile_preprocess,
)
from climalab.lab.sandbox import (
    SandboxSetupFailure,
    execute_artifact,
    prepare_workspace,
    run_sandboxed,
    run_tool,
)
from climalab.lab.scheduler import schedule_run
from climalab.lab.types import (
    CodeArtifact,
    DebugRound,
    DebugTranscript,
    ExecutionResult,
    RunResults,
    TaskGraph,
    TaskOutcome,
    ToolInvocation,
    ValidationVerdict,
)
from climalab.lab.validate import validate_data, validate_figures, validate_outputs

__all__ = [
    "CONVERSION_TABLE",
    "CodeArtifact",
    "CodeGenerator",
    "CodeParseFailure",
    "CycleDetected",
    "DatasetResolutionFailure",
    "DebugExhausted",
    "DebugRound",
    "DebugTranscript",
    "ExecutionResult",
    "LabRunner",
    "NoToolForStep",
    "PreprocessFailure",
    "RunResults",
    "SandboxSetupFailure",
    "TaskGraph",
    "TaskOutcome",
    "ToolInvocation",
    "UnknownUnitConversion",
    "ValidationVerdict",
    "build_task_graph",
    "build_triplet",
    "compile_preprocess",
    "execute_artifact",
    "failure_excerpt",
    "make_sanitizer",
    "output_digest",
    "prepare_workspace",
    "promote_on_success",
    "retrieve_template",
    "run_debug_loop",
    "run_sandboxed",
    "run_tool",
    "schedule_run",
    "tool_doc_lines",
    "validate_data",
    "validate_figures",
    "validate_outputs",
    "verdict_excerpt",
]
