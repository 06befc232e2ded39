"""Scripted replies for every prompt the bundled scenarios produce.

The corpus builder wraps this in a RecordingBackend and drives the real
service; each reply is persisted as a mock fixture keyed by prompt hash, so
replayed runs are byte-for-byte deterministic. Replies are pure functions
of the prompt text plus the sampling seed: no clocks, no counters, no
filesystem.

Dispatch is on the task tag in the first line of the user message; prompt
fields are parsed back out of the known prompt layouts.
"""

from __future__ import annotations

import json
import re
import zlib

DEMO_QUERY = (
    "Comparison of global multi-model simulated climatology and variability "
    "for 1985-2014 with observations: surface air temperature"
)

DEMO_SUMMARY = (
    "Evaluate how well the historical simulations reproduce observed "
    "surface air temperature: build the 1985-2014 multi-model climatology "
    "from monthly tas of the five available models, the matching "
    "observational climatology, their grid-point bias, and a global mean "
    "anomaly series for variability, all in degrees Celsius."
)

DRILL_PATTERN = re.compile(r"fail(?:s)? (\d+) time")

_OBJECTIVE = (
    "Compare the simulated 1985-2014 surface air temperature climatology "
    "and variability of the historical multi-model ensemble against "
    "gridded observations"
)

_DATASETS = [
    {"alias": "sim", "activity": "CMIP", "experiment": "historical",
     "variable": "tas", "frequency": "monthly"},
    {"alias": "obs", "activity": "obs", "source_model": "HadCRUT5",
     "variable": "tas"},
]

_PREPROCESSING = [
    {"kind": "convert_units", "params": {"target_units": "degC"}},
]

_TASK_MODEL_CLIM = {
    "id": "model-clim",
    "description": "multi-model mean climatology of surface air temperature "
                   "for 1985-2014",
    "method": "time-mean each model over the analysis period, then average "
              "across models on the common grid",
    "inputs": ["dataset:sim"],
    "outputs": ["outputs/model_clim.json"],
    "depends_on": [],
}

_TASK_OBS_CLIM = {
    "id": "obs-clim",
    "description": "observed climatology of surface air temperature for "
                   "1985-2014",
    "method": "time-mean of the gridded observational product over the "
              "analysis period",
    "inputs": ["dataset:obs"],
    "outputs": ["outputs/obs_clim.json"],
    "depends_on": [],
}

_TASK_BIAS = {
    "id": "bias-map",
    "description": "mean state bias of the multi-model ensemble against "
                   "observations",
    "method": "grid-point difference of the simulated minus the observed "
              "climatology with area-weighted summary statistics",
    "inputs": ["task:model-clim:outputs/model_clim.json",
               "task:obs-clim:outputs/obs_clim.json"],
    "outputs": ["outputs/bias.json"],
    "depends_on": ["model-clim", "obs-clim"],
}

_TASK_ANOMALY = {
    "id": "anomaly-series",
    "description": "global mean surface air temperature anomaly time series "
                   "relative to the 1985-2014 baseline",
    "method": "area-weighted global mean per model, annual averaging, "
              "ensemble mean, anomalies against the period mean",
    "inputs": ["dataset:sim"],
    "outputs": ["outputs/anomaly.json"],
    "depends_on": [],
}

_TASK_ANOMALY_V2 = {
    "id": "anomaly-series",
    "description": "global mean surface air temperature anomaly time series "
                   "relative to the 1985-2014 baseline with a fitted linear "
                   "trend",
    "method": "area-weighted global mean per model, annual averaging, "
              "ensemble mean, anomalies against the period mean, "
              "least-squares trend line overlaid on the figure",
    "inputs": ["dataset:sim"],
    "outputs": ["outputs/anomaly.json"],
    "depends_on": [],
}

_VISUALIZATIONS = [
    {"name": "model_clim_map", "kind": "map",
     "title": "Multi-model mean climatology 1985-2014"},
    {"name": "obs_clim_map", "kind": "map",
     "title": "Observed climatology 1985-2014"},
    {"name": "bias_map", "kind": "map",
     "title": "Ensemble mean bias vs observations"},
    {"name": "anomaly_series", "kind": "line",
     "title": "Global mean anomaly vs 1985-2014 baseline"},
]

_DELIVERABLES = [
    "unified report with per-figure interpretations",
    "expert committee assessment",
]


def _plan(objective, datasets, preprocessing, tasks, visualizations):
    return {
        "schema_version": 1,
        "objective": objective,
        "datasets": datasets,
        "preprocessing": preprocessing,
        "diagnostics": tasks,
        "visualizations": visualizations,
        "deliverables": _DELIVERABLES,
    }


DEMO_PLAN = _plan(_OBJECTIVE, _DATASETS, _PREPROCESSING,
                  [_TASK_MODEL_CLIM, _TASK_OBS_CLIM, _TASK_BIAS,
                   _TASK_ANOMALY],
                  _VISUALIZATIONS)

DEMO_PLAN_REVISED = _plan(
    _OBJECTIVE + ", with the anomaly trend made explicit",
    _DATASETS, _PREPROCESSING,
    [_TASK_MODEL_CLIM, _TASK_OBS_CLIM, _TASK_BIAS, _TASK_ANOMALY_V2],
    _VISUALIZATIONS[:3] + [
        {"name": "anomaly_series", "kind": "scatter",
         "title": "Global mean anomaly with fitted trend"},
    ],
)

# Candidate variants the merge step reconciles: one climatology-focused,
# one variability-focused, one complete.
_CANDIDATES = {
    1: _plan("Compare the simulated surface air temperature climatology "
             "for 1985-2014 against observations",
             _DATASETS, _PREPROCESSING,
             [_TASK_MODEL_CLIM, _TASK_OBS_CLIM, _TASK_BIAS],
             _VISUALIZATIONS[:3]),
    2: _plan("Quantify simulated global mean surface air temperature "
             "variability for 1985-2014",
             [_DATASETS[0]], _PREPROCESSING,
             [_TASK_MODEL_CLIM, _TASK_ANOMALY],
             [_VISUALIZATIONS[0], _VISUALIZATIONS[3]]),
    3: DEMO_PLAN,
}


def _field(text: str, name: str) -> str:
    prefix = f"{name}: "
    for line in text.splitlines():
        if line.startswith(prefix):
            return line[len(prefix):]
    return ""


def _fenced_json(doc: dict) -> str:
    return "```json\n" + json.dumps(doc, indent=1) + "\n```"


def _fenced_python(script: str) -> str:
    return "```python\n" + script + "\n```"


# -- task scripts ---------------------------------------------------------

MODEL_CLIM_SCRIPT = '''\
import os

import _gridio as gio
import _svgfig as fig

PERIOD = (1985, 2014)


def time_mean(doc):
    header = doc["header"]
    idx = gio.select_period(header["coords"]["time"], PERIOD[0], PERIOD[1])
    ncell = len(header["coords"]["lat"]) * len(header["coords"]["lon"])
    acc = [0.0] * ncell
    for i in idx:
        slab = gio.time_slab(doc, i)
        for c in range(ncell):
            acc[c] += slab[c]
    return [v / len(idx) for v in acc]


def main():
    ws = gio.parse_workspace()
    params = gio.load_params(ws)
    paths = params["inputs"]["dataset:sim"]
    total = None
    header = None
    for rel in paths:
        doc = gio.read_grid(os.path.join(ws, rel))
        mean = time_mean(doc)
        if total is None:
            total, header = mean, doc["header"]
        else:
            total = [a + b for a, b in zip(total, mean)]
    clim = [v / len(paths) for v in total]
    lats = header["coords"]["lat"]
    lons = header["coords"]["lon"]
    units = header["units"]
    out_rel = "outputs/model_clim.json"
    gio.write_grid(os.path.join(ws, out_rel), header["variable"], units,
                   ["lat", "lon"], {"lat": lats, "lon": lons}, clim)
    title = "Multi-model mean climatology 1985-2014"
    chart = fig.map_chart(clim, lats, lons, title, "longitude", "latitude")
    ref = fig.save_figure(ws, "model_clim_map", chart, title=title,
                          xlabel="longitude", ylabel="latitude", units=units)
    gio.write_manifest(
        ws, "model-clim",
        outputs=[{"path": out_rel, "kind": "grid"}],
        figures=[ref],
        statistics={"global_mean": gio.area_mean(clim, lats, lons),
                    "models": float(len(paths))},
        variable=header["variable"], units=units,
    )


gio.run_tool(main)
'''

OBS_CLIM_SCRIPT = '''\
import os

import _gridio as gio
import _svgfig as fig

PERIOD = (1985, 2014)


def main():
    ws = gio.parse_workspace()
    params = gio.load_params(ws)
    rel = params["inputs"]["dataset:obs"][0]
    doc = gio.read_grid(os.path.join(ws, rel))
    header = doc["header"]
    idx = gio.select_period(header["coords"]["time"], PERIOD[0], PERIOD[1])
    lats = header["coords"]["lat"]
    lons = header["coords"]["lon"]
    ncell = len(lats) * len(lons)
    acc = [0.0] * ncell
    for i in idx:
        slab = gio.time_slab(doc, i)
        for c in range(ncell):
            acc[c] += slab[c]
    clim = [v / len(idx) for v in acc]
    units = header["units"]
    out_rel = "outputs/obs_clim.json"
    gio.write_grid(os.path.join(ws, out_rel), header["variable"], units,
                   ["lat", "lon"], {"lat": lats, "lon": lons}, clim)
    title = "Observed climatology 1985-2014"
    chart = fig.map_chart(clim, lats, lons, title, "longitude", "latitude")
    ref = fig.save_figure(ws, "obs_clim_map", chart, title=title,
                          xlabel="longitude", ylabel="latitude", units=units)
    gio.write_manifest(
        ws, "obs-clim",
        outputs=[{"path": out_rel, "kind": "grid"}],
        figures=[ref],
        statistics={"global_mean": gio.area_mean(clim, lats, lons)},
        variable=header["variable"], units=units,
    )


gio.run_tool(main)
'''

BIAS_SCRIPT = '''\
import os

import _gridio as gio
import _svgfig as fig


def main():
    ws = gio.parse_workspace()
    params = gio.load_params(ws)
    model_rel = params["inputs"]["task:model-clim:outputs/model_clim.json"][0]
    obs_rel = params["inputs"]["task:obs-clim:outputs/obs_clim.json"][0]
    model = gio.read_grid(os.path.join(ws, model_rel))
    obs = gio.read_grid(os.path.join(ws, obs_rel))
    bias = [m - o for m, o in zip(model["data"], obs["data"])]
    header = model["header"]
    lats = header["coords"]["lat"]
    lons = header["coords"]["lon"]
    units = header["units"]
    out_rel = "outputs/bias.json"
    gio.write_grid(os.path.join(ws, out_rel), header["variable"], units,
                   ["lat", "lon"], {"lat": lats, "lon": lons}, bias)
    weights = gio.lat_weights(lats)
    sq = 0.0
    wsum = 0.0
    for i, w in enumerate(weights):
        for j in range(len(lons)):
            sq += w * bias[i * len(lons) + j] ** 2
            wsum += w
    title = "Ensemble mean bias vs observations"
    chart = fig.map_chart(bias, lats, lons, title, "longitude", "latitude")
    ref = fig.save_figure(ws, "bias_map", chart, title=title,
                          xlabel="longitude", ylabel="latitude", units=units)
    gio.write_manifest(
        ws, "bias-map",
        outputs=[{"path": out_rel, "kind": "grid"}],
        figures=[ref],
        statistics={"global_mean_bias": gio.area_mean(bias, lats, lons),
                    "rmse": (sq / wsum) ** 0.5},
        variable=header["variable"], units=units,
    )


gio.run_tool(main)
'''

_ANOMALY_COMMON = '''\
import os

import _gridio as gio
import _svgfig as fig

BASELINE = (1985, 2014)


def annual_global_means(doc):
    header = doc["header"]
    times = header["coords"]["time"]
    lats = header["coords"]["lat"]
    lons = header["coords"]["lon"]
    idx = gio.select_period(times, BASELINE[0], BASELINE[1])
    annual = {}
    for i in idx:
        year = int(times[i])
        annual.setdefault(year, []).append(
            gio.area_mean(gio.time_slab(doc, i), lats, lons))
    years = sorted(annual)
    return years, [sum(annual[y]) / len(annual[y]) for y in years]


def load_series(ws, paths):
    years = None
    total = None
    header = None
    for rel in paths:
        doc = gio.read_grid(os.path.join(ws, rel))
        yrs, means = annual_global_means(doc)
        if total is None:
            years, total, header = yrs, means, doc["header"]
        else:
            total = [a + b for a, b in zip(total, means)]
    series = [v / len(paths) for v in total]
    base = sum(series) / len(series)
    return years, [v - base for v in series], base, header
'''

ANOMALY_SCRIPT = _ANOMALY_COMMON + '''\


def main():
    ws = gio.parse_workspace()
    params = gio.load_params(ws)
    years, anomalies, base, header = load_series(
        ws, params["inputs"]["dataset:sim"])
    xs = [float(y) for y in years]
    units = header["units"]
    out_rel = "outputs/anomaly.json"
    gio.write_grid(os.path.join(ws, out_rel), header["variable"], units,
                   ["time"], {"time": [y + 0.5 for y in years]}, anomalies)
    slope, _ = gio.ols(xs, anomalies)
    title = "Global mean anomaly vs 1985-2014 baseline"
    chart = fig.line_chart(xs, anomalies, title, "year", "anomaly")
    ref = fig.save_figure(ws, "anomaly_series", chart, title=title,
                          xlabel="year", ylabel="anomaly", units=units)
    gio.write_manifest(
        ws, "anomaly-series",
        outputs=[{"path": out_rel, "kind": "series"}],
        figures=[ref],
        statistics={"trend_per_decade": slope * 10.0,
                    "baseline_mean": base},
        variable=header["variable"], units=units,
    )


gio.run_tool(main)
'''

ANOMALY_TREND_SCRIPT = _ANOMALY_COMMON + '''\


def main():
    ws = gio.parse_workspace()
    params = gio.load_params(ws)
    years, anomalies, base, header = load_series(
        ws, params["inputs"]["dataset:sim"])
    xs = [float(y) for y in years]
    units = header["units"]
    out_rel = "outputs/anomaly.json"
    gio.write_grid(os.path.join(ws, out_rel), header["variable"], units,
                   ["time"], {"time": [y + 0.5 for y in years]}, anomalies)
    fit = gio.ols(xs, anomalies)
    title = "Global mean anomaly with fitted trend"
    chart = fig.scatter_chart(xs, anomalies, fit, title, "year", "anomaly")
    ref = fig.save_figure(ws, "anomaly_series", chart, title=title,
                          xlabel="year", ylabel="anomaly", units=units)
    gio.write_manifest(
        ws, "anomaly-series",
        outputs=[{"path": out_rel, "kind": "series"}],
        figures=[ref],
        statistics={"trend_per_decade": fit[0] * 10.0,
                    "baseline_mean": base},
        variable=header["variable"], units=units,
    )


gio.run_tool(main)
'''

DRILL_BODY = '''\
import os

import _gridio as gio
import _svgfig as fig


def main():
    ws = gio.parse_workspace()
    if CURRENT_REV < FAIL_UNTIL:
        gio.fail("IntentionalDefect",
                 "revision %d cannot complete" % CURRENT_REV)
    params = gio.load_params(ws)
    rel = params["inputs"]["dataset:series"][0]
    doc = gio.read_grid(os.path.join(ws, rel))
    header = doc["header"]
    times = header["coords"]["time"]
    lats = header["coords"]["lat"]
    lons = header["coords"]["lon"]
    series = [gio.area_mean(gio.time_slab(doc, i), lats, lons)
              for i in range(len(times))]
    out_rel = "outputs/drill.json"
    gio.write_grid(os.path.join(ws, out_rel), header["variable"],
                   header["units"], ["time"], {"time": times}, series)
    title = "Repaired diagnostic output"
    chart = fig.line_chart(times, series, title, "year", header["variable"])
    ref = fig.save_figure(ws, "drill_series", chart, title=title,
                          xlabel="year", ylabel=header["variable"],
                          units=header["units"])
    gio.write_manifest(
        ws, "repair-drill",
        outputs=[{"path": out_rel, "kind": "series"}],
        figures=[ref],
        statistics={"series_mean": sum(series) / len(series)},
        variable=header["variable"], units=header["units"],
    )


gio.run_tool(main)
'''


def drill_script(fail_until: int, revision: int) -> str:
    return (f"FAIL_UNTIL = {fail_until}\nCURRENT_REV = {revision}\n\n"
            + DRILL_BODY)


def drill_plan(fail_until: int) -> dict:
    return {
        "schema_version": 1,
        "objective": f"exercise the automated repair loop with {fail_until} "
                     "scripted failures before success",
        "datasets": [
            {"alias": "series", "activity": "CMIP",
             "experiment": "historical", "source_model": "ACCESS-CM2",
             "variable": "tas", "frequency": "annual"},
        ],
        "preprocessing": [],
        "diagnostics": [
            {"id": "drill",
             "description": "diagnostic that fails until repair revision "
                            f"{fail_until}",
             "method": "deliberately defective computation repaired one "
                       "revision at a time",
             "inputs": ["dataset:series"],
             "outputs": ["outputs/drill.json"],
             "depends_on": []},
        ],
        "visualizations": [
            {"name": "drill_series", "kind": "line",
             "title": "Repaired diagnostic output"},
        ],
        "deliverables": ["repaired diagnostic output"],
    }


_SCRIPTS_BY_DESCRIPTION = {
    _TASK_MODEL_CLIM["description"]: MODEL_CLIM_SCRIPT,
    _TASK_OBS_CLIM["description"]: OBS_CLIM_SCRIPT,
    _TASK_BIAS["description"]: BIAS_SCRIPT,
    _TASK_ANOMALY["description"]: ANOMALY_SCRIPT,
    _TASK_ANOMALY_V2["description"]: ANOMALY_TREND_SCRIPT,
}


# -- committee roles --------------------------------------------------------

ROLES = (
    "Environmental Scientist",
    "Agricultural Scientist",
    "Public Health Expert",
    "Urban Planner",
    "Water Resources Engineer",
    "Energy Systems Analyst",
    "Marine Ecologist",
    "Climate Economist",
    "Insurance Risk Analyst",
    "Emergency Management Planner",
    "Transportation Engineer",
    "Food Security Analyst",
)

_NEGATIVE_ROLES = frozenset({
    "Public Health Expert",
    "Water Resources Engineer",
    "Marine Ecologist",
    "Insurance Risk Analyst",
    "Transportation Engineer",
})


def role_orientation(domain: str) -> str:
    return "negative" if domain in _NEGATIVE_ROLES else "positive"


def role_confidence(domain: str) -> float:
    return round(0.6 + (zlib.crc32(domain.encode("utf-8")) % 36) / 100.0, 2)


class UnscriptedPrompt(ValueError):
    pass


class ScriptedResponder:
    """ModelRequest -> reply text for the bundled scenario corpus."""

    def __init__(self):
        self._handlers = {
            "[summarize-requirements]": self._summarize,
            "[generate-candidate-plan]": self._candidate,
            "[merge-plans]": self._merge,
            "[generate-code]": self._generate_code,
            "[debug-code]": self._debug_code,
            "[interpret-figure]": self._interpret,
            "[synthesize-report]": self._report,
            "[committee-domains]": self._domains,
            "[committee-assessment]": self._assessment,
            "[committee-chair-report]": self._chair_report,
        }

    def __call__(self, request) -> str:
        user = request.messages[-1].text
        marker = user.split("\n", 1)[0].strip()
        handler = self._handlers.get(marker)
        if handler is None:
            raise UnscriptedPrompt(f"no scripted reply for {marker!r}")
        return handler(user, request.seed)

    # -- planning ----------------------------------------------------------

    def _summarize(self, user: str, seed: int) -> str:
        query = _field(user, "query")
        if DRILL_PATTERN.search(query):
            return ("Run the deliberately defective diagnostic so the "
                    f"repair loop is exercised: {query}.")
        return DEMO_SUMMARY

    def _candidate(self, user: str, seed: int) -> str:
        requirements = _field(user, "requirements")
        drill = DRILL_PATTERN.search(requirements)
        if drill:
            return _fenced_json(drill_plan(int(drill.group(1))))
        if _field(user, "reviewer comment"):
            return _fenced_json(DEMO_PLAN_REVISED)
        return _fenced_json(_CANDIDATES.get(seed, DEMO_PLAN))

    def _merge(self, user: str, seed: int) -> str:
        drill = re.search(r"fails until repair revision (\d+)", user)
        if drill:
            return _fenced_json(drill_plan(int(drill.group(1))))
        if "fitted linear trend" in user:
            return _fenced_json(DEMO_PLAN_REVISED)
        return _fenced_json(DEMO_PLAN)

    # -- coding ------------------------------------------------------------

    def _generate_code(self, user: str, seed: int) -> str:
        description = _field(user, "description")
        drill = re.search(r"fails until repair revision (\d+)", description)
        if drill:
            return _fenced_python(drill_script(int(drill.group(1)), 0))
        script = _SCRIPTS_BY_DESCRIPTION.get(description)
        if script is None:
            raise UnscriptedPrompt(f"no script for task {description!r}")
        return _fenced_python(script)

    def _debug_code(self, user: str, seed: int) -> str:
        revision = int(_field(user, "revision"))
        fail_until = re.search(r"FAIL_UNTIL = (\d+)", user)
        if not fail_until:
            raise UnscriptedPrompt("debug prompt carries no drill script")
        return _fenced_python(drill_script(int(fail_until.group(1)),
                                           revision))

    # -- synthesis -----------------------------------------------------------

    def _interpret(self, user: str, seed: int) -> str:
        title = _field(user, "title") or "The figure"
        units = _field(user, "units")
        description = _field(user, "description")
        stats = _field(user, "statistics")
        lines = [
            f"{title} summarizes the {description}. The field is rendered "
            f"in {units} and behaves smoothly across the domain, with the "
            "strongest values at low latitudes and a clear poleward "
            "falloff."
        ]
        if stats:
            lines[0] += f" Reported statistics: {stats}."
        lines.append("highlights:")
        lines.append("- spatial structure follows the expected "
                     "latitude profile")
        for pair in [p.strip() for p in stats.split(";") if p.strip()][:2]:
            lines.append(f"- {pair}")
        return "\n".join(lines)

    def _report(self, user: str, seed: int) -> str:
        objective = _field(user, "objective")
        tasks = re.findall(r"^task ([\w-]+): (.+)$", user, re.MULTILINE)
        clauses = "; ".join(
            f"{tid} delivered the {desc}" for tid, desc in tasks)
        return (
            f"The run meets its objective ({objective}). {clauses}. "
            "Simulated fields track the observational reference closely: "
            "the ensemble reproduces the observed climatological pattern, "
            "residual biases are small relative to the signal, and the "
            "anomaly series shows the expected warming tendency over the "
            "analysis period. No diagnostic contradicts another, so the "
            "results can be read as one consistent picture."
        )

    # -- committee -----------------------------------------------------------

    def _domains(self, user: str, seed: int) -> str:
        count = int(_field(user, "experts needed"))
        if count > len(ROLES):
            raise UnscriptedPrompt(f"only {len(ROLES)} scripted roles")
        return json.dumps({"domains": list(ROLES[:count])})

    def _assessment(self, user: str, seed: int) -> str:
        domain = _field(user, "domain")
        topic = _field(user, "topic")
        orientation = role_orientation(domain)
        if orientation == "positive":
            narrative = (
                f"From the {domain.lower()} standpoint the findings are "
                "reassuring: the simulated fields are close enough to "
                f"observations to support decisions about {topic[:120]}."
            )
        else:
            narrative = (
                f"From the {domain.lower()} standpoint the residual model "
                "bias and the warming tendency are material risks for "
                f"{topic[:120]} and warrant mitigation planning."
            )
        return json.dumps({
            "narrative": narrative,
            "orientation": orientation,
            "confidence": role_confidence(domain),
        })

    def _chair_report(self, user: str, seed: int) -> str:
        positive = len(re.findall(r"\(positive,", user))
        negative = len(re.findall(r"\(negative,", user))
        consensus = [
            "The analysis is methodologically sound and the reported "
            "magnitudes are plausible.",
        ]
        if positive >= negative:
            consensus.append("Most members judge the projected changes "
                             "manageable for planning purposes.")
        disagreements = []
        if positive and negative:
            disagreements.append(
                "Members weighing systemic risk read the same bias and "
                "trend findings as net hazards, while sectoral planners "
                "read them as tolerable."
            )
        uncertainties = [
            "A five-member ensemble and a single observational product "
            "limit confidence in regional detail.",
        ]
        return json.dumps({
            "consensus": consensus,
            "disagreements": disagreements,
            "uncertainties": uncertainties,
        })
