"""Time-mean climatology map over a calendar-year period.

params.json: {"input": "inputs/<file>.json", "period": [start, end],
              "figure_name": optional, default "climatology_map"}

Writes the per-cell mean as a [lat, lon] Grid-JSON, a map figure with
sidecar, and a manifest whose statistics carry the cos-latitude weighted
global mean.
"""

import os

import _gridio as gio
import _svgfig as fig


def main():
    ws = gio.parse_workspace()
    p = gio.load_params(ws)
    doc = gio.read_grid(os.path.join(ws, p["input"]))
    header = doc["header"]
    if header["dims"] != ["time", "lat", "lon"]:
        gio.fail("InvalidSpec", "climatology needs a [time, lat, lon] grid")
    times = header["coords"]["time"]
    lats = header["coords"]["lat"]
    lons = header["coords"]["lon"]
    period = p.get("period") or list(gio.data_year_range(times))
    idx = gio.select_period(times, period[0], period[1])

    ncell = len(lats) * len(lons)
    acc = [0.0] * ncell
    for i in idx:
        slab = gio.time_slab(doc, i)
        for c in range(ncell):
            acc[c] += slab[c]
    mean_map = [v / len(idx) for v in acc]
    global_mean = gio.area_mean(mean_map, lats, lons)

    variable = header["variable"]
    units = header["units"]
    rel_out = os.path.join("outputs", "climatology_map.json")
    gio.write_grid(
        os.path.join(ws, rel_out),
        variable,
        units,
        ["lat", "lon"],
        {"lat": lats, "lon": lons},
        mean_map,
    )

    name = p.get("figure_name", "climatology_map")
    title = "%s climatology %d-%d" % (variable, period[0], period[1])
    svg = fig.map_chart(mean_map, lats, lons, title, "longitude (deg east)",
                        "latitude (deg north)")
    figure = fig.save_figure(ws, name, svg, title, "longitude (deg east)",
                             "latitude (deg north)", units)

    gio.write_manifest(
        ws,
        "climatology_mean",
        outputs=[{"path": rel_out, "kind": "grid"}],
        figures=[figure],
        statistics={
            "global_mean": global_mean,
            "period_start": float(period[0]),
            "period_end": float(period[1]),
            "time_steps_used": float(len(idx)),
        },
        variable=variable,
        units=units,
    )


if __name__ == "__main__":
    gio.run_tool(main)
