import json
import subprocess
import sys
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parents[1]
SCRIPTS_DIR = REPO_ROOT / "refscripts"


def make_workspace(base: Path) -> Path:
    ws = base / "ws"
    (ws / "inputs").mkdir(parents=True)
    (ws / "outputs").mkdir()
    return ws


def run_script(name: str, ws: Path, params: dict) -> subprocess.CompletedProcess:
    (ws / "params.json").write_text(json.dumps(params), encoding="utf-8")
    return subprocess.run(
        [sys.executable, str(SCRIPTS_DIR / name), "--workspace", str(ws)],
        capture_output=True,
        text=True,
        timeout=60,
    )


def write_grid_file(path: Path, variable, units, dims, coords, data):
    doc = {
        "header": {
            "variable": variable,
            "units": units,
            "dims": list(dims),
            "coords": {d: list(coords[d]) for d in dims},
            "fill_value": None,
        },
        "data": list(data),
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc), encoding="utf-8")
    return doc


def write_series_file(path: Path, times, values, variable="tas", units="K"):
    return write_grid_file(path, variable, units, ["time"], {"time": times}, values)


def load_json(path: Path):
    return json.loads(path.read_text(encoding="utf-8"))


@pytest.fixture
def workspace(tmp_path):
    return make_workspace(tmp_path)
