"""Record a golden wire-traffic log for the operator console tests.

Runs a scripted slider sweep against the real service (in-process ASGI, the
same code `telegrasp serve` runs), capturing every outbound message and
every solution that came back. The console test suite replays the script
through its own slider mapping and state machine and must reproduce this
log exactly. Regenerate with:

    python demos/record_console_golden.py
"""

import json
import math
from pathlib import Path

from fastapi.testclient import TestClient

from telegrasp import fit_em, save_model
from telegrasp.model import FitConfig
from telegrasp.service import create_app, load_registry

from common import CLUSTER_MEANS, TASKS, desk_bounds, synthetic_demonstrations

N_FRAMES = 60
MODE_SWITCHES = {20: "knitro", 40: "intent_only"}  # before these frame indices


def slider_script() -> list[list[float]]:
    """Deterministic sweep: endpoint frames first, then smooth motion."""
    frames = [[0.0] * 9, [1.0] * 9]
    for t in range(N_FRAMES - 2):
        frames.append([
            0.5 + 0.45 * math.sin(0.13 * t + 0.8 * i) for i in range(9)
        ])
    return frames


def features_from_sliders(sliders, lower, upper):
    # must mirror the console's mapping exactly: pose sliders interpolate
    # the bounds, aperture sliders pass through
    pose = [lower[i] + sliders[i] * (upper[i] - lower[i]) for i in range(6)]
    return {
        "position": pose[:3],
        "orientation": pose[3:6],
        "apertures": [float(s) for s in sliders[6:]],
    }


def main() -> None:
    out_dir = Path(__file__).parent / "output" / "models"
    out_dir.mkdir(parents=True, exist_ok=True)
    robot_overrides = {
        0b100: CLUSTER_MEANS[0b100]
        + [0.0, -0.1, 0.12, 0.0, 0.0, 0.0, 0.3, -0.2, 0.1],
        0b101: CLUSTER_MEANS[0b101]
        + [0.0, 0.08, 0.10, 0.0, 0.0, 0.0, -0.15, 0.25, 0.2],
    }
    config = FitConfig(store_responsibilities=False)
    robot = fit_em(
        synthetic_demonstrations("three-finger", 7, overrides=robot_overrides),
        TASKS, config, n_apertures=3,
    )
    human = fit_em(
        synthetic_demonstrations("human", 11, shift=0.03, scale=0.06),
        TASKS, config, n_apertures=3,
    )
    save_model(robot, out_dir / "three-finger.json")
    save_model(human, out_dir / "human.json")

    bounds = desk_bounds()
    lower = [float(v) for v in bounds.lower]
    upper = [float(v) for v in bounds.upper]
    registry = load_registry(out_dir)
    app = create_app(registry, {"default": bounds}, rate_limit=0.0)

    script = slider_script()
    outbound: list[dict] = []
    inbound: list[dict] = []

    with TestClient(app) as client:
        with client.websocket_connect("/session") as ws:
            hello = {"type": "hello", "model": "three-finger",
                     "mode": "mimic", "bounds": "default"}
            ws.send_json(hello)
            outbound.append(hello)
            for i, sliders in enumerate(script):
                if i in MODE_SWITCHES:
                    switch = {"type": "set_mode", "mode": MODE_SWITCHES[i]}
                    ws.send_json(switch)
                    outbound.append(switch)
                msg = {
                    "type": "hand_update",
                    "seq": i,
                    "features": features_from_sliders(sliders, lower, upper),
                }
                ws.send_json(msg)
                outbound.append(msg)
                inbound.append(ws.receive_json())

    fixture = {
        "model": "three-finger",
        "tasks": list(TASKS.names),
        "n_apertures": 3,
        "bounds": {"id": "default", "lower": lower, "upper": upper},
        "mode_switches": {str(k): v for k, v in MODE_SWITCHES.items()},
        "initial_mode": "mimic",
        "script": script,
        "outbound": outbound,
        "inbound": inbound,
    }
    dest = Path(__file__).parent.parent / "frontend" / "tests" / "fixtures"
    dest.mkdir(parents=True, exist_ok=True)
    path = dest / "golden_session.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(fixture, fh, indent=1)
        fh.write("\n")
    print(f"wrote {path}: {len(outbound)} outbound, {len(inbound)} inbound")


if __name__ == "__main__":
    main()
