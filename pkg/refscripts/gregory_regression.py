"""Gregory regression: net TOA flux against surface warming.

params.json: {"delta_t": "inputs/<series>.json", "net_flux": "inputs/<series>.json",
              "figure_name": optional}

Fits N = F + lambda * dT. With lambda < 0 the equilibrium warming for a CO2
doubling is ECS2x = -F / (2 * lambda); a non-negative lambda is reported as a
warning and no ECS value is emitted.
"""

import os

import _gridio as gio
import _svgfig as fig


def main():
    ws = gio.parse_workspace()
    p = gio.load_params(ws)
    dt_doc = gio.read_grid(os.path.join(ws, p["delta_t"]))
    nf_doc = gio.read_grid(os.path.join(ws, p["net_flux"]))
    for doc, label in ((dt_doc, "delta_t"), (nf_doc, "net_flux")):
        if doc["header"]["dims"] != ["time"]:
            gio.fail("InvalidSpec", "%s must be a [time] series" % label)
    dts = dt_doc["data"]
    flux = nf_doc["data"]
    if len(dts) != len(flux):
        gio.fail("DegenerateInput",
                 "series lengths differ: %d vs %d" % (len(dts), len(flux)))

    lam, forcing = gio.ols(dts, flux)

    stats = {"F": forcing, "lambda": lam, "points": float(len(dts))}
    warnings = []
    if lam < 0.0:
        stats["ECS2x"] = -forcing / (2.0 * lam)
    else:
        warnings.append("NonNegativeLambda")

    name = p.get("figure_name", "gregory_fit")
    title = "Gregory regression"
    ylabel = "net flux (%s)" % nf_doc["header"]["units"]
    xlabel = "dT (%s)" % dt_doc["header"]["units"]
    svg = fig.scatter_chart(dts, flux, (lam, forcing), title, xlabel, ylabel)
    figure = fig.save_figure(ws, name, svg, title, xlabel, ylabel,
                             nf_doc["header"]["units"])

    gio.write_manifest(
        ws,
        "gregory_regression",
        figures=[figure],
        statistics=stats,
        variable=dt_doc["header"]["variable"],
        units=nf_doc["header"]["units"],
        warnings=warnings,
    )


if __name__ == "__main__":
    gio.run_tool(main)
