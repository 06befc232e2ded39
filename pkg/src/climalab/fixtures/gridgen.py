"""Synthetic Grid-JSON files for the bundled catalog rows.

Fields are smooth latitude profiles plus a seasonal cycle, a linear trend,
and seeded noise; every source gets small offsets derived from its name so
models disagree with each other and with the observations. All values stay
inside the configured plausibility ranges, before and after unit
conversion.
"""

from __future__ import annotations

import json
import math
import random
import zlib
from pathlib import Path

from climalab.fixtures.catalogdata import catalog_rows, default_data_rows

GRID_LAT = 6
GRID_LON = 8

# (variable, units) -> construction parameters
PROFILES = {
    ("tas", "K"): {
        "base": 288.0, "lat_gradient": 30.0, "seasonal_amp": 2.0,
        "trend_per_year": 0.02, "noise_amp": 0.3, "shift_step": 0.2,
    },
    ("tas", "degC"): {
        "base": 14.85, "lat_gradient": 30.0, "seasonal_amp": 2.0,
        "trend_per_year": 0.02, "noise_amp": 0.3, "shift_step": 0.2,
    },
    ("pr", "mm/day"): {
        "base": 3.2, "lat_gradient": 2.4, "seasonal_amp": 0.3,
        "trend_per_year": 0.0, "noise_amp": 0.1, "shift_step": 0.05,
        "clamp_min": 0.0,
    },
    ("tos", "degC"): {
        "base": 18.0, "lat_gradient": 12.0, "seasonal_amp": 1.0,
        "trend_per_year": 0.01, "noise_amp": 0.2, "shift_step": 0.2,
    },
}


def lat_centers(n: int = GRID_LAT) -> list[float]:
    step = 180.0 / n
    return [-90.0 + step * (i + 0.5) for i in range(n)]


def lon_centers(n: int = GRID_LON) -> list[float]:
    step = 360.0 / n
    return [step * (j + 0.5) for j in range(n)]


def _time_coords(frequency: str, start: int, end: int) -> list[float]:
    if frequency == "monthly":
        return [y + (m - 0.5) / 12.0
                for y in range(start, end + 1) for m in range(1, 13)]
    return [y + 0.5 for y in range(start, end + 1)]


def row_values(row: dict) -> tuple[list[float], list[float], list[float], list[float]]:
    """(times, lats, lons, flat data) for one catalog row."""
    profile = PROFILES[(row["variable"], row["units"])]
    start, end = row["time_range"]
    times = _time_coords(row["frequency"], start, end)
    lats = lat_centers()
    lons = lon_centers()

    crc = zlib.crc32(row["source_model"].encode("utf-8"))
    base = profile["base"] + ((crc % 9) - 4) * profile["shift_step"]
    trend = profile["trend_per_year"] + ((crc // 9) % 5 - 2) * 0.002
    rng = random.Random(zlib.crc32(row["uri"].encode("utf-8")))
    clamp_min = profile.get("clamp_min")

    data = []
    for t in times:
        frac = t - math.floor(t)
        elapsed = t - start
        for lat in lats:
            rad = math.radians(lat)
            cell = (base
                    + profile["lat_gradient"] * (math.cos(rad) - 1.0)
                    + profile["seasonal_amp"] * math.sin(2 * math.pi * frac)
                    * math.sin(rad)
                    + trend * elapsed)
            for _ in lons:
                v = cell + profile["noise_amp"] * (2.0 * rng.random() - 1.0)
                if clamp_min is not None and v < clamp_min:
                    v = clamp_min
                data.append(round(v, 4))
    return times, lats, lons, data


def write_row_file(data_root, row: dict) -> Path:
    times, lats, lons, data = row_values(row)
    doc = {
        "header": {
            "variable": row["variable"],
            "units": row["units"],
            "dims": ["time", "lat", "lon"],
            "coords": {"time": times, "lat": lats, "lon": lons},
            "fill_value": None,
        },
        "data": data,
    }
    path = Path(data_root) / row["uri"]
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")
    return path


def generate_data(data_root, rows=None) -> list[Path]:
    if rows is None:
        rows = default_data_rows(catalog_rows())
    return [write_row_file(data_root, row) for row in rows]
