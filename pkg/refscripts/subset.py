"""Spatial/temporal subset of a [time, lat, lon] grid.

params.json: {"input": ..., "lat_range": [a, b], "lon_range": [a, b],
              "time_range": [start_year, end_year], "output": optional}
At least one range must be given; an empty selection is an error.
"""

import os

import _gridio as gio


def _within(axis, lo, hi):
    return [i for i, v in enumerate(axis) if lo <= v <= hi]


def main():
    ws = gio.parse_workspace()
    p = gio.load_params(ws)
    ranges = {k: p.get(k) for k in ("lat_range", "lon_range", "time_range")}
    if not any(ranges.values()):
        gio.fail("InvalidSpec", "at least one of lat/lon/time range required")
    doc = gio.read_grid(os.path.join(ws, p["input"]))
    header = doc["header"]
    if header["dims"] != ["time", "lat", "lon"]:
        gio.fail("InvalidSpec", "subset needs a [time, lat, lon] grid")
    times = header["coords"]["time"]
    lats = header["coords"]["lat"]
    lons = header["coords"]["lon"]

    if ranges["time_range"]:
        t_idx = gio.select_period(times, ranges["time_range"][0], ranges["time_range"][1])
    else:
        t_idx = list(range(len(times)))
    lat_idx = (
        _within(lats, *ranges["lat_range"]) if ranges["lat_range"] else list(range(len(lats)))
    )
    lon_idx = (
        _within(lons, *ranges["lon_range"]) if ranges["lon_range"] else list(range(len(lons)))
    )
    if not lat_idx or not lon_idx:
        gio.fail("InvalidSpec", "selection is empty")

    nlon = len(lons)
    data = []
    for t in t_idx:
        slab = gio.time_slab(doc, t)
        for i in lat_idx:
            data.extend(slab[i * nlon + j] for j in lon_idx)

    out_name = p.get("output", "subset.json")
    rel = os.path.join("outputs", out_name)
    gio.write_grid(
        os.path.join(ws, rel),
        header["variable"],
        header["units"],
        ["time", "lat", "lon"],
        {
            "time": [times[i] for i in t_idx],
            "lat": [lats[i] for i in lat_idx],
            "lon": [lons[j] for j in lon_idx],
        },
        data,
    )
    gio.write_manifest(
        ws,
        "subset",
        outputs=[{"path": rel, "kind": "grid"}],
        statistics={
            "time_steps": float(len(t_idx)),
            "lat_cells": float(len(lat_idx)),
            "lon_cells": float(len(lon_idx)),
        },
        variable=header["variable"],
        units=header["units"],
    )


if __name__ == "__main__":
    gio.run_tool(main)
