"""Drive the live service over its wire protocol, in-process.

Loads the fitted models into the service application, opens a WebSocket
session through the ASGI test client (no network needed), streams a short
scripted motion with a mode switch halfway, and prints what an operator
console would receive. `telegrasp serve` exposes exactly this protocol over
a real port.
"""

from pathlib import Path

import numpy as np
from fastapi.testclient import TestClient

from telegrasp.features import feature_payload
from telegrasp.service import create_app, load_registry

from common import desk_bounds

models_dir = Path(__file__).parent / "output" / "models"
registry = load_registry(models_dir)
bounds = desk_bounds()
app = create_app(registry, {"default": bounds}, rate_limit=0.0)

human = registry.get("human")
robot = registry.get("three-finger")
start = human.class_for(0b001).mean
goal = human.class_for(0b100).mean

print("catalog:", [m["id"] for m in TestClient(app).get("/models").json()])
print()

with TestClient(app) as client:
    with client.websocket_connect("/session") as ws:
        ws.send_json({"type": "hello", "model": "three-finger",
                      "mode": "mimic", "bounds": "default"})
        print(f"{'seq':>4}{'mode':>13}{'objective':>12}{'gamma':>10}"
              f"{'top p_r':>20}")
        for i in range(10):
            alpha = i / 9.0
            pose = (1 - alpha) * start + alpha * goal
            if i == 5:
                ws.send_json({"type": "set_mode", "mode": "knitro"})
            ws.send_json({
                "type": "hand_update", "seq": i,
                "features": feature_payload(pose, robot.n_apertures),
            })
            msg = ws.receive_json()
            top = int(np.argmax(msg["p_r"]))
            gamma = "-" if msg["gamma"] is None else f"{msg['gamma']:.3f}"
            print(f"{msg['seq']:>4}{msg['mode']:>13}{msg['objective']:>12.5f}"
                  f"{gamma:>10}{robot.tasks.label(top):>20}")

print("\nthe solution after seq 5 reports the switched mode, and gamma")
print("appears once the arbitration controller starts using divergence")
print("weights between the human and robot models.")
