"""Replay a scripted approach trajectory through every controller.

Writes a trajectory of the operator hand drifting from a neutral pose toward
the handover grasp, replays it under all three modes, and compares the
solver-level metrics (path length, objective statistics, final task match).
"""

import json
from pathlib import Path

import numpy as np

from telegrasp import load_model, load_trajectory, replay
from telegrasp.features import feature_payload
from telegrasp.trajectory import write_report

from common import desk_bounds

out_dir = Path(__file__).parent / "output"
models_dir = out_dir / "models"
robot = load_model(models_dir / "three-finger.json")
human = load_model(models_dir / "human.json")
bounds = desk_bounds()

rng = np.random.default_rng(5)
# the operator moves in their own grasp style; the robot's handover cluster
# sits elsewhere, so intent-assisted modes diverge from the raw motion
start = human.class_for(0b001).mean
goal = human.class_for(0b100).mean
traj_path = out_dir / "approach.jsonl"
with open(traj_path, "w") as fh:
    fh.write(json.dumps({"meta": {"task": "handover", "operator": "demo"}}) + "\n")
    for i in range(40):
        alpha = i / 39.0
        pose = (1 - alpha) * start + alpha * goal
        pose = np.clip(pose + rng.normal(0, 0.01, size=robot.d),
                       bounds.lower, bounds.upper)
        fh.write(json.dumps({
            "t": i / 30.0,
            "features": feature_payload(pose, robot.n_apertures),
        }) + "\n")

trajectory = load_trajectory(traj_path)
print(f"trajectory: {len(trajectory.frames)} frames, task={trajectory.task}\n")

print(f"{'mode':<14}{'path len':>10}{'mean obj':>12}{'max obj':>12}"
      f"{'ms/frame':>10}{'task match':>12}")
for mode in ("mimic", "intent_only", "knitro"):
    report = replay(trajectory, robot, mode, bounds, human_model=human)
    s = report.summary()
    write_report(report, out_dir / f"approach.{mode}.json")
    print(f"{mode:<14}{s['path_length']:>10.3f}{s['mean_objective']:>12.5f}"
          f"{s['max_objective']:>12.5f}{s['mean_solve_ms']:>10.2f}"
          f"{str(s['final_task_match']):>12}")

print("\nmimic travels exactly with the operator; intent-only holds near the")
print("inferred grasp (short path, low objective); the arbitration mode")
print("follows with elastic slack. Reports saved next to this script.")
