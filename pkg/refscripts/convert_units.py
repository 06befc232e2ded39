"""Unit conversion from a fixed table.

params.json: {"input": "inputs/<file>.json", "target_units": "degC",
              "output": optional name under outputs/}

Supported: K <-> degC (offset), mm/day <-> m/s (scale). Anything else is
UnknownUnitConversion; there is deliberately no pass-through guessing.
"""

import os

import _gridio as gio

# (source, target) -> (scale, offset): new = value * scale + offset
CONVERSIONS = {
    ("K", "degC"): (1.0, -273.15),
    ("degC", "K"): (1.0, 273.15),
    ("mm/day", "m/s"): (1.0 / 86400000.0, 0.0),
    ("m/s", "mm/day"): (86400000.0, 0.0),
}


def main():
    ws = gio.parse_workspace()
    p = gio.load_params(ws)
    target = p.get("target_units")
    if not target:
        gio.fail("InvalidSpec", "target_units required")
    doc = gio.read_grid(os.path.join(ws, p["input"]))
    header = doc["header"]
    source = header["units"]
    if source == target:
        scale, offset = 1.0, 0.0
    else:
        try:
            scale, offset = CONVERSIONS[(source, target)]
        except KeyError:
            gio.fail(
                "UnknownUnitConversion",
                "no conversion from %r to %r" % (source, target),
            )

    data = [v * scale + offset for v in doc["data"]]
    out_name = p.get("output", "converted.json")
    rel = os.path.join("outputs", out_name)
    gio.write_grid(
        os.path.join(ws, rel),
        header["variable"],
        target,
        header["dims"],
        header["coords"],
        data,
        header.get("fill_value"),
    )
    gio.write_manifest(
        ws,
        "convert_units",
        outputs=[{"path": rel, "kind": "grid"}],
        statistics={"scale": scale, "offset": offset},
        variable=header["variable"],
        units=target,
    )


if __name__ == "__main__":
    gio.run_tool(main)
