"""Grid-JSON I/O and shared tool plumbing.

Grid-JSON is a plain-JSON gridded-data format:

    {"header": {"variable": "tas", "units": "K",
                "dims": ["time", "lat", "lon"],
                "coords": {"time": [...], "lat": [...], "lon": [...]},
                "fill_value": null},
     "data": [ ... row-major flat floats ... ]}

Series files use dims ["time"]; maps use ["lat", "lon"].

Tool scripts run as `python <script>.py --workspace <dir>` and find their
parameters in <dir>/params.json. Inputs live under inputs/, products go to
outputs/, and a result.json manifest is written at the workspace root.
"""

import argparse
import json
import math
import os
import sys


class ToolError(Exception):
    """Contract violation with a stable machine-readable name."""

    def __init__(self, name, message):
        super().__init__(message)
        self.name = name


def fail(name, message):
    raise ToolError(name, message)


def parse_workspace():
    parser = argparse.ArgumentParser()
    parser.add_argument("--workspace", required=True)
    args = parser.parse_args()
    ws = os.path.abspath(args.workspace)
    if not os.path.isdir(ws):
        raise ToolError("SandboxSetupFailure", "workspace %s does not exist" % ws)
    return ws


def load_params(ws):
    path = os.path.join(ws, "params.json")
    if not os.path.isfile(path):
        raise ToolError("InvalidSpec", "params.json missing from workspace")
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def read_grid(path):
    if not os.path.isfile(path):
        raise ToolError("InvalidSpec", "input file %s not found" % path)
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    header = doc.get("header") or {}
    data = doc.get("data")
    dims = header.get("dims") or []
    coords = header.get("coords") or {}
    if not header.get("units"):
        raise ToolError("InvalidSpec", "input header lacks units")
    size = 1
    for d in dims:
        size *= len(coords.get(d, ()))
    if not isinstance(data, list) or len(data) != size:
        raise ToolError(
            "InvalidSpec",
            "data length %s does not match dims product %s" % (len(data or ()), size),
        )
    for d in dims:
        axis = coords.get(d, ())
        if any(b <= a for a, b in zip(axis, axis[1:])):
            raise ToolError("InvalidSpec", "coordinate %s not strictly increasing" % d)
    return doc


def write_grid(path, variable, units, dims, coords, data, fill_value=None):
    doc = {
        "header": {
            "variable": variable,
            "units": units,
            "dims": list(dims),
            "coords": {d: list(coords[d]) for d in dims},
            "fill_value": fill_value,
        },
        "data": list(data),
    }
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")
    return doc


def grid_shape(doc):
    header = doc["header"]
    return [len(header["coords"][d]) for d in header["dims"]]


def lat_weights(lats):
    return [math.cos(math.radians(lat)) for lat in lats]


def area_mean(values, lats, lons):
    """Cos-latitude weighted mean of one [lat, lon] slab (flat row-major)."""
    weights = lat_weights(lats)
    total = 0.0
    wsum = 0.0
    nlon = len(lons)
    for i, w in enumerate(weights):
        row = values[i * nlon : (i + 1) * nlon]
        total += w * sum(row)
        wsum += w * nlon
    return total / wsum


def time_slab(doc, index):
    """Flat [lat, lon] slab at one time index of a [time, lat, lon] grid."""
    header = doc["header"]
    nlat = len(header["coords"]["lat"])
    nlon = len(header["coords"]["lon"])
    step = nlat * nlon
    return doc["data"][index * step : (index + 1) * step]


def data_year_range(times):
    return int(math.floor(times[0])), int(math.floor(times[-1]))


def select_period(times, start, end):
    """Indices of decimal-year coords within calendar years [start, end]."""
    if start > end:
        fail("PeriodOutOfRange", "period start %s exceeds end %s" % (start, end))
    first, last = data_year_range(times)
    if start < first or end > last:
        fail(
            "PeriodOutOfRange",
            "period %s-%s outside data years %s-%s" % (start, end, first, last),
        )
    idx = [i for i, t in enumerate(times) if start <= t < end + 1]
    if not idx:
        fail("PeriodOutOfRange", "period %s-%s selects no time steps" % (start, end))
    return idx


def monthly_coords(start_year, end_year):
    return [
        year + (month - 0.5) / 12.0
        for year in range(start_year, end_year + 1)
        for month in range(1, 13)
    ]


def annual_coords(start_year, end_year):
    return [year + 0.5 for year in range(start_year, end_year + 1)]


def ols(xs, ys):
    """Least-squares fit y = intercept + slope * x."""
    n = len(xs)
    if n < 2 or len(ys) != n:
        fail("DegenerateInput", "need two equal-length points, got %s/%s" % (len(xs), len(ys)))
    mx = sum(xs) / n
    my = sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    if sxx == 0.0:
        fail("DegenerateInput", "predictor has zero variance")
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    slope = sxy / sxx
    return slope, my - slope * mx


def write_manifest(ws, tool, outputs=(), figures=(), statistics=None,
                   variable="", units="", warnings=()):
    manifest = {
        "tool": tool,
        "status": "ok",
        "outputs": list(outputs),
        "figures": list(figures),
        "statistics": statistics or {},
        "variable": variable,
        "units": units,
        "warnings": list(warnings),
    }
    with open(os.path.join(ws, "result.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=1)
        fh.write("\n")
    return manifest


def run_tool(main):
    """Standard entrypoint wrapper: contract errors exit 2 with a stable tag."""
    try:
        main()
    except ToolError as err:
        sys.stderr.write("ERROR %s: %s\n" % (err.name, err))
        sys.exit(2)
