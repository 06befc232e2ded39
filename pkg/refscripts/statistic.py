"""Per-cell time statistic of a [time, lat, lon] grid: mean, variance, anomaly.

params.json: {"input": ..., "statistic": "mean"|"variance"|"anomaly",
              "baseline": [start, end] (anomaly only, default full range),
              "output": optional}

mean/variance write a [lat, lon] map; anomaly writes the full grid minus the
per-cell baseline climatology (variable suffixed `_anomaly`). Variance is the
population variance over the time axis (suffix `_variance`).
"""

import os

import _gridio as gio


def main():
    ws = gio.parse_workspace()
    p = gio.load_params(ws)
    stat = p.get("statistic")
    if stat not in ("mean", "variance", "anomaly"):
        gio.fail("NoToolForStep", "unsupported statistic %r" % stat)
    doc = gio.read_grid(os.path.join(ws, p["input"]))
    header = doc["header"]
    if header["dims"] != ["time", "lat", "lon"]:
        gio.fail("InvalidSpec", "statistic needs a [time, lat, lon] grid")
    times = header["coords"]["time"]
    lats = header["coords"]["lat"]
    lons = header["coords"]["lon"]
    ncell = len(lats) * len(lons)
    nt = len(times)

    acc = [0.0] * ncell
    for i in range(nt):
        slab = gio.time_slab(doc, i)
        for c in range(ncell):
            acc[c] += slab[c]
    mean_map = [v / nt for v in acc]

    if stat == "mean":
        out_data, dims = mean_map, ["lat", "lon"]
        coords = {"lat": lats, "lon": lons}
        variable, stats = header["variable"], {
            "global_mean": gio.area_mean(mean_map, lats, lons)
        }
    elif stat == "variance":
        acc2 = [0.0] * ncell
        for i in range(nt):
            slab = gio.time_slab(doc, i)
            for c in range(ncell):
                d = slab[c] - mean_map[c]
                acc2[c] += d * d
        out_data = [v / nt for v in acc2]
        dims, coords = ["lat", "lon"], {"lat": lats, "lon": lons}
        variable = header["variable"] + "_variance"
        stats = {"global_mean_variance": gio.area_mean(out_data, lats, lons)}
    else:
        baseline = p.get("baseline") or list(gio.data_year_range(times))
        idx = gio.select_period(times, baseline[0], baseline[1])
        base_map = [0.0] * ncell
        for i in idx:
            slab = gio.time_slab(doc, i)
            for c in range(ncell):
                base_map[c] += slab[c]
        base_map = [v / len(idx) for v in base_map]
        out_data = []
        for i in range(nt):
            slab = gio.time_slab(doc, i)
            out_data.extend(slab[c] - base_map[c] for c in range(ncell))
        dims = ["time", "lat", "lon"]
        coords = {"time": times, "lat": lats, "lon": lons}
        variable = header["variable"] + "_anomaly"
        stats = {
            "baseline_start": float(baseline[0]),
            "baseline_end": float(baseline[1]),
        }

    units = header["units"]
    out_name = p.get("output", "statistic_%s.json" % stat)
    rel = os.path.join("outputs", out_name)
    gio.write_grid(os.path.join(ws, rel), variable, units, dims, coords, out_data)
    gio.write_manifest(
        ws,
        "statistic",
        outputs=[{"path": rel, "kind": "grid"}],
        statistics=stats,
        variable=variable,
        units=units,
    )


if __name__ == "__main__":
    gio.run_tool(main)
