"""Area-weighted global-mean series relative to a baseline period.

params.json: {"input": "inputs/<file>.json", "baseline": [start, end],
              "figure_name": optional, default "anomaly_series"}

The output series variable is suffixed `_anomaly`: anomalies live on their
own scale, so absolute-value plausibility ranges must not apply to them.
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
        gio.fail("InvalidSpec", "anomaly series needs a [time, lat, lon] grid")
    times = header["coords"]["time"]
    lats = header["coords"]["lat"]
    lons = header["coords"]["lon"]
    baseline = p.get("baseline") or list(gio.data_year_range(times))
    base_idx = gio.select_period(times, baseline[0], baseline[1])

    series = [
        gio.area_mean(gio.time_slab(doc, i), lats, lons) for i in range(len(times))
    ]
    baseline_mean = sum(series[i] for i in base_idx) / len(base_idx)
    anomalies = [v - baseline_mean for v in series]

    variable = header["variable"] + "_anomaly"
    units = header["units"]
    rel_out = os.path.join("outputs", "anomaly_series.json")
    gio.write_grid(
        os.path.join(ws, rel_out),
        variable,
        units,
        ["time"],
        {"time": times},
        anomalies,
    )

    name = p.get("figure_name", "anomaly_series")
    title = "%s global anomaly vs %d-%d" % (header["variable"], baseline[0], baseline[1])
    svg = fig.line_chart(times, anomalies, title, "year", "anomaly (%s)" % units)
    figure = fig.save_figure(ws, name, svg, title, "year", "anomaly (%s)" % units, units)

    gio.write_manifest(
        ws,
        "anomaly_series",
        outputs=[{"path": rel_out, "kind": "series"}],
        figures=[figure],
        statistics={
            "baseline_mean": baseline_mean,
            "anomaly_sum": sum(anomalies),
            "time_steps": float(len(times)),
        },
        variable=variable,
        units=units,
    )


if __name__ == "__main__":
    gio.run_tool(main)
