"""Nearest-neighbor regrid of a [time, lat, lon] grid to a target resolution.

params.json: {"input": "inputs/<file>.json", "target": {"lat": N, "lon": M},
              "output": optional name under outputs/}
"""

import os

import _gridio as gio


def _centers(lo, hi, n, wrap=False):
    span = hi - lo
    step = span / n
    return [lo + step * (i + 0.5) for i in range(n)]


def _nearest(axis, value):
    best, dist = 0, abs(axis[0] - value)
    for i, a in enumerate(axis[1:], start=1):
        d = abs(a - value)
        if d < dist:
            best, dist = i, d
    return best


def main():
    ws = gio.parse_workspace()
    p = gio.load_params(ws)
    target = p.get("target") or {}
    nlat, nlon = int(target.get("lat", 0)), int(target.get("lon", 0))
    if nlat <= 0 or nlon <= 0:
        gio.fail("InvalidSpec", "target must give positive lat and lon counts")
    doc = gio.read_grid(os.path.join(ws, p["input"]))
    header = doc["header"]
    if header["dims"] != ["time", "lat", "lon"]:
        gio.fail("InvalidSpec", "regrid needs a [time, lat, lon] grid")

    src_lats = header["coords"]["lat"]
    src_lons = header["coords"]["lon"]
    times = header["coords"]["time"]
    new_lats = _centers(-90.0, 90.0, nlat)
    new_lons = _centers(0.0, 360.0, nlon)
    lat_map = [_nearest(src_lats, lat) for lat in new_lats]
    lon_map = [_nearest(src_lons, lon) for lon in new_lons]

    src_nlon = len(src_lons)
    data = []
    for t in range(len(times)):
        slab = gio.time_slab(doc, t)
        for si in lat_map:
            row = slab[si * src_nlon : (si + 1) * src_nlon]
            data.extend(row[sj] for sj in lon_map)

    out_name = p.get("output", "regridded.json")
    rel = os.path.join("outputs", out_name)
    gio.write_grid(
        os.path.join(ws, rel),
        header["variable"],
        header["units"],
        ["time", "lat", "lon"],
        {"time": times, "lat": new_lats, "lon": new_lons},
        data,
    )
    gio.write_manifest(
        ws,
        "regrid",
        outputs=[{"path": rel, "kind": "grid"}],
        statistics={"target_lat": float(nlat), "target_lon": float(nlon)},
        variable=header["variable"],
        units=header["units"],
    )


if __name__ == "__main__":
    gio.run_tool(main)
