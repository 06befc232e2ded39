"""Rule-based output validation: one data verdict, one figure verdict.

The checks mechanize what a reviewer would reject outright: missing or
non-finite numbers, undeclared units, values outside per-variable
plausibility ranges, figures without complete sidecar metadata. Anything
subtler stays a human concern via the verdict endpoint.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

from climalab.lab.types import ExecutionResult, ValidationVerdict

SIDECAR_FIELDS = ("title", "xlabel", "ylabel", "units")


def _finite(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) \
        and math.isfinite(value)


def _within(ws: Path, rel: str) -> Path | None:
    try:
        full = (ws / rel).resolve()
        full.relative_to(ws.resolve())
    except (ValueError, OSError):
        return None
    return full


def _check_grid_file(path: Path, rel: str, ranges: dict, findings: list):
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
        header = doc["header"]
        data = doc["data"]
        variable = header["variable"]
        units = header["units"]
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        findings.append(("UnreadableOutput", f"{rel}: {exc}"))
        return
    fill = header.get("fill_value")
    for i, value in enumerate(data):
        if value == fill and fill is not None:
            continue
        if not _finite(value):
            findings.append(("NonFiniteValue", f"{rel}: data[{i}]"))
            return
    bounds = ranges.get(f"{variable}|{units}")
    if bounds:
        lo, hi = bounds
        for i, value in enumerate(data):
            if value == fill and fill is not None:
                continue
            if not lo <= value <= hi:
                findings.append(
                    ("ImplausibleValue",
                     f"{rel}: data[{i}]={value!r} outside "
                     f"[{lo}, {hi}] for {variable} [{units}]")
                )
                return


def validate_data(result: ExecutionResult, task, workspace,
                  plausibility_ranges: dict) -> ValidationVerdict:
    ws = Path(workspace)
    findings: list = []
    manifest = result.result_manifest
    if manifest is None:
        return ValidationVerdict("data", False,
                                 (("MissingManifest", "no result manifest"),))

    for rel in task.outputs:
        full = _within(ws, rel)
        if full is None or not full.is_file():
            findings.append(("MissingOutput",
                             f"plan-declared output {rel} not produced"))

    for entry in manifest.get("outputs", []):
        rel = entry.get("path", "")
        full = _within(ws, rel)
        if full is None:
            findings.append(("MissingOutput", f"{rel}: escapes workspace"))
            continue
        if not full.is_file():
            findings.append(("MissingOutput", f"{rel}: declared but absent"))
            continue
        if entry.get("kind") in ("grid", "series") or rel.endswith(".json"):
            _check_grid_file(full, rel, plausibility_ranges, findings)

    if not str(manifest.get("units", "")).strip():
        findings.append(("MissingUnits", "manifest declares no units"))

    for key, value in (manifest.get("statistics") or {}).items():
        if not _finite(value):
            findings.append(("NonFiniteValue", f"statistics.{key}={value!r}"))

    return ValidationVerdict("data", not findings, tuple(findings))


def validate_figures(result: ExecutionResult, workspace) -> ValidationVerdict:
    ws = Path(workspace)
    findings: list = []
    manifest = result.result_manifest or {}
    for entry in manifest.get("figures", []):
        rel = entry.get("path", "")
        full = _within(ws, rel)
        if full is None or not full.is_file():
            findings.append(("MissingFigure", f"{rel}: absent"))
            continue
        if full.stat().st_size == 0:
            findings.append(("EmptyFigure", f"{rel}: zero bytes"))
        sidecar_rel = entry.get("sidecar", "")
        sidecar = _within(ws, sidecar_rel) if sidecar_rel else None
        if sidecar is None or not sidecar.is_file():
            findings.append(("MissingSidecar", f"{rel}: no sidecar"))
            continue
        try:
            meta = json.loads(sidecar.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            findings.append(("MissingSidecar", f"{sidecar_rel}: {exc}"))
            continue
        for fld in SIDECAR_FIELDS:
            if not str(meta.get(fld, "")).strip():
                findings.append(
                    ("IncompleteSidecar", f"{sidecar_rel}: missing {fld}")
                )
    return ValidationVerdict("figure", not findings, tuple(findings))


def validate_outputs(result: ExecutionResult, task, workspace,
                     plausibility_ranges: dict):
    return (
        validate_data(result, task, workspace, plausibility_ranges),
        validate_figures(result, workspace),
    )
