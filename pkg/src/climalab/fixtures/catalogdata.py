"""Synthetic dataset inventory: 60 simulation rows plus 4 observational rows.

Everything is generated from these constants, so the catalog file, the data
generator, and the scripted planner all agree on what exists.
"""

from __future__ import annotations

import json
from pathlib import Path

MODELS = ("ACCESS-CM2", "CanESM5", "MIROC6", "MPI-ESM1-2-LR", "NorESM2-LM")

EXPERIMENTS = (
    # (activity, experiment, start year, end year)
    ("CMIP", "historical", 1985, 2014),
    ("CMIP", "piControl", 1850, 1879),
    ("ScenarioMIP", "ssp245", 2015, 2044),
)

VARIABLES = (
    # (short name, units)
    ("tas", "K"),
    ("pr", "mm/day"),
)

FREQUENCIES = ("monthly", "annual")

OBS_PRODUCTS = (
    # (product, variable, units)
    ("HadCRUT5", "tas", "K"),
    ("ERA5", "tas", "degC"),
    ("GPCP-SG", "pr", "mm/day"),
    ("HadISST", "tos", "degC"),
)

OBS_TIME_RANGE = (1985, 2014)


def sim_uri(activity: str, experiment: str, model: str, variable: str, frequency: str) -> str:
    return f"{activity}/{experiment}/{model}/{variable}_{frequency}.json"


def obs_uri(product: str, variable: str) -> str:
    return f"obs/{product}/{variable}_monthly.json"


def catalog_rows() -> list[dict]:
    rows = []
    for activity, experiment, start, end in EXPERIMENTS:
        for model in MODELS:
            for variable, units in VARIABLES:
                for frequency in FREQUENCIES:
                    rows.append(
                        {
                            "activity": activity,
                            "experiment": experiment,
                            "source_model": model,
                            "ensemble_member": "r1i1p1f1",
                            "variable": variable,
                            "frequency": frequency,
                            "time_range": [start, end],
                            "units": units,
                            "uri": sim_uri(activity, experiment, model, variable, frequency),
                        }
                    )
    for product, variable, units in OBS_PRODUCTS:
        rows.append(
            {
                "activity": "obs",
                "experiment": "observations",
                "source_model": product,
                "ensemble_member": "obs",
                "variable": variable,
                "frequency": "monthly",
                "time_range": list(OBS_TIME_RANGE),
                "units": units,
                "uri": obs_uri(product, variable),
            }
        )
    return rows


def write_catalog(path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for row in catalog_rows():
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    return path


# Rows whose data files the default `fixtures build` materializes. Monthly
# historical tas plus the matching observation cover the demo scenarios;
# annual rows stay cheap and are generated wholesale.
def default_data_rows(rows: list[dict]) -> list[dict]:
    selected = []
    for row in rows:
        if row["frequency"] == "annual":
            selected.append(row)
        elif row["variable"] in ("tas", "pr") and row["experiment"] in (
            "historical",
            "observations",
        ):
            selected.append(row)
    return selected
