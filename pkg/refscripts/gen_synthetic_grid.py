"""Generate a synthetic Grid-JSON dataset with analytically known structure.

params.json:
    variable, units          required strings
    grid: {lat: N, lon: M}   cell counts (centers span the globe)
    years: [start, end]      calendar years, inclusive
    frequency                "monthly" or "annual"
    base                     mean level at the equator
    lat_gradient             equator-to-pole falloff scale (times 1-cos(lat))
    seasonal_amp             hemisphere-antisymmetric annual cycle amplitude
    trend_per_year           linear trend added as (t - first year)
    noise_amp                uniform noise amplitude, seeded
    step_year, step_amp      optional step change at a calendar year
    clamp_min                optional lower clamp (e.g. 0 for precipitation)
    seed                     RNG seed
    output                   file name written under outputs/

The construction makes downstream answers exact: the area-weighted global
mean of the latitude shape is computable in closed form, the injected trend
is recovered by regression, and the step amplitude survives anomaly series.
"""

import math
import os
import random

import _gridio as gio


def lat_centers(n):
    step = 180.0 / n
    return [-90.0 + step * (i + 0.5) for i in range(n)]


def lon_centers(n):
    step = 360.0 / n
    return [step * (j + 0.5) for j in range(n)]


def check_spec(p):
    for key in ("variable", "units", "grid", "years", "frequency"):
        if key not in p:
            gio.fail("InvalidSpec", "missing required param %r" % key)
    grid = p["grid"]
    if int(grid.get("lat", 0)) <= 0 or int(grid.get("lon", 0)) <= 0:
        gio.fail("InvalidSpec", "grid sizes must be positive")
    start, end = p["years"]
    if start > end:
        gio.fail("InvalidSpec", "years start %s exceeds end %s" % (start, end))
    if p["frequency"] not in ("monthly", "annual"):
        gio.fail("InvalidSpec", "frequency must be monthly or annual")
    if float(p.get("noise_amp", 0.0)) < 0:
        gio.fail("InvalidSpec", "noise_amp must be non-negative")


def main():
    ws = gio.parse_workspace()
    p = gio.load_params(ws)
    check_spec(p)

    start, end = int(p["years"][0]), int(p["years"][1])
    lats = lat_centers(int(p["grid"]["lat"]))
    lons = lon_centers(int(p["grid"]["lon"]))
    if p["frequency"] == "monthly":
        times = gio.monthly_coords(start, end)
    else:
        times = gio.annual_coords(start, end)

    base = float(p.get("base", 0.0))
    lat_gradient = float(p.get("lat_gradient", 0.0))
    seasonal_amp = float(p.get("seasonal_amp", 0.0))
    trend = float(p.get("trend_per_year", 0.0))
    noise_amp = float(p.get("noise_amp", 0.0))
    step_year = p.get("step_year")
    step_amp = float(p.get("step_amp", 0.0))
    clamp_min = p.get("clamp_min")
    rng = random.Random(int(p.get("seed", 0)))

    data = []
    for t in times:
        frac = t - math.floor(t)
        elapsed = t - start
        step_term = step_amp if step_year is not None and t >= step_year else 0.0
        for lat in lats:
            rad = math.radians(lat)
            shape = base + lat_gradient * (math.cos(rad) - 1.0)
            season = seasonal_amp * math.sin(2.0 * math.pi * frac) * math.sin(rad)
            cell_base = shape + season + trend * elapsed + step_term
            for _ in lons:
                v = cell_base
                if noise_amp:
                    v += noise_amp * (2.0 * rng.random() - 1.0)
                if clamp_min is not None and v < clamp_min:
                    v = float(clamp_min)
                data.append(v)

    out_name = p.get("output", "%s_%s.json" % (p["variable"], p["frequency"]))
    rel = os.path.join("outputs", out_name)
    gio.write_grid(
        os.path.join(ws, rel),
        p["variable"],
        p["units"],
        ["time", "lat", "lon"],
        {"time": times, "lat": lats, "lon": lons},
        data,
    )
    gio.write_manifest(
        ws,
        "gen_synthetic_grid",
        outputs=[{"path": rel, "kind": "grid"}],
        statistics={
            "time_steps": float(len(times)),
            "cells": float(len(lats) * len(lons)),
        },
        variable=p["variable"],
        units=p["units"],
    )


if __name__ == "__main__":
    gio.run_tool(main)
