"""Ordinary least-squares trend of a time series.

params.json: {"input": "inputs/<series>.json", "figure_name": optional}

The input must be a one-dimensional [time] Grid-JSON. Slope is reported in
data units per year (time coords are decimal years).
"""

import os

import _gridio as gio
import _svgfig as fig


def main():
    ws = gio.parse_workspace()
    p = gio.load_params(ws)
    doc = gio.read_grid(os.path.join(ws, p["input"]))
    header = doc["header"]
    if header["dims"] != ["time"]:
        gio.fail("InvalidSpec", "linear trend needs a [time] series")
    times = header["coords"]["time"]
    values = doc["data"]
    slope, intercept = gio.ols(times, values)

    variable = header["variable"]
    units = header["units"]
    name = p.get("figure_name", "trend_fit")
    title = "%s linear trend" % variable
    svg = fig.scatter_chart(times, values, (slope, intercept), title, "year",
                            "%s (%s)" % (variable, units))
    figure = fig.save_figure(ws, name, svg, title, "year",
                             "%s (%s)" % (variable, units), units)

    gio.write_manifest(
        ws,
        "linear_trend",
        figures=[figure],
        statistics={
            "slope_per_year": slope,
            "intercept": intercept,
            "points": float(len(times)),
        },
        variable=variable,
        units=units,
    )


if __name__ == "__main__":
    gio.run_tool(main)
