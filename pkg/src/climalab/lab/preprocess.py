"""Compile plan preprocessing steps into bound tool invocations.

The unit-conversion table here must agree with the one inside the
convert_units tool script; the tool re-derives scale/offset from the file's
actual units at run time, so the bound values are a compile-time promise
that execution independently checks.
"""

from __future__ import annotations

from climalab.errors import ClimalabError
from climalab.lab.types import ToolInvocation
from climalab.planner.schema import STATISTICS

# (source, target) -> (scale, offset): converted = value * scale + offset
CONVERSION_TABLE = {
    ("K", "degC"): (1.0, -273.15),
    ("degC", "K"): (1.0, 273.15),
    ("mm/day", "m/s"): (1.0 / 86400000.0, 0.0),
    ("m/s", "mm/day"): (86400000.0, 0.0),
}


class NoToolForStep(ClimalabError):
    http_status = 422


class UnknownUnitConversion(ClimalabError):
    http_status = 422


def _bind(step) -> dict:
    kind = step.kind
    params = dict(step.params)
    if kind == "convert_units":
        source = params.get("from_units") or params.get("source_units")
        target = params.get("target_units") or params.get("to_units")
        if not target:
            raise UnknownUnitConversion("conversion step names no target units")
        if source and source != target:
            try:
                scale, offset = CONVERSION_TABLE[(source, target)]
            except KeyError:
                raise UnknownUnitConversion(
                    f"no conversion from {source!r} to {target!r}"
                ) from None
            return {"target_units": target, "scale": scale, "offset": offset}
        return {"target_units": target}
    if kind == "regrid":
        target = params.get("target") or {}
        if not (int(target.get("lat", 0)) > 0 and int(target.get("lon", 0)) > 0):
            raise NoToolForStep("regrid step needs target lat/lon counts")
        return {"target": {"lat": int(target["lat"]), "lon": int(target["lon"])}}
    if kind == "subset":
        ranges = {
            k: params[k]
            for k in ("lat_range", "lon_range", "time_range")
            if params.get(k)
        }
        if not ranges:
            raise NoToolForStep("subset step binds no lat/lon/time range")
        return ranges
    if kind == "statistic":
        stat = params.get("statistic")
        if stat not in STATISTICS:
            raise NoToolForStep(f"unsupported statistic {stat!r}")
        bound = {"statistic": stat}
        if params.get("baseline"):
            bound["baseline"] = list(params["baseline"])
        return bound
    raise NoToolForStep(f"no tool registered for step kind {kind!r}")


def compile_preprocess(plan, library) -> list[ToolInvocation]:
    """Each plan step becomes one invocation, applied per dataset in order."""
    invocations = []
    for index, step in enumerate(plan.preprocessing):
        bound = _bind(step)
        manifest = library.get_tool(step.kind)
        if manifest is None:
            raise NoToolForStep(f"tool {step.kind!r} not in the tool library")
        invocations.append(
            ToolInvocation(
                tool=step.kind,
                entrypoint=manifest.entrypoint,
                params=bound,
                step_index=index,
            )
        )
    return invocations
