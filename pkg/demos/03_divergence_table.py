"""Embodiment similarity as a pairwise divergence table.

Builds three single-class models whose populations nest (a narrow gripper
inside a medium one inside a wide hand) and prints the divergence matrix.
Rows are the embodiment acting on input, columns the embodiment providing
it: a simple gripper reads cheaply from a rich hand, but a rich hand cannot
be predicted from a simple gripper, so the matrix is strongly asymmetric.
"""

from pathlib import Path

import numpy as np

from telegrasp import GaussianClass, GraspModel, TaskSet, kl_table
from telegrasp.divergence import write_kl_csv, write_kl_json

tasks = TaskSet(["transfer"])


def single_class_model(embodiment: str, spread: float) -> GraspModel:
    cls = GaussianClass(combination=1, prior=1.0, mean=np.zeros(2),
                        covariance=np.eye(2) * spread)
    return GraspModel(embodiment=embodiment, tasks=tasks, d=2, classes=[cls])


models = [
    single_class_model("two-finger", 0.01),
    single_class_model("three-finger", 0.1),
    single_class_model("five-finger", 1.0),
]

ids, table = kl_table(models, combination=1)

width = max(len(i) for i in ids) + 2
print(" " * width + "".join(f"{i:>14}" for i in ids))
for name, row in zip(ids, table):
    print(f"{name:<{width}}" + "".join(f"{v:>14.4f}" for v in row))

print("\nReading row two-finger: the three-finger column is the most similar")
print("input source, the five-finger hand noticeably further. The reverse")
print("entries (reading columns down) blow up by orders of magnitude: rich")
print("structures cannot be inferred from simple ones.")

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)
write_kl_csv(out_dir / "divergence.csv", ids, table)
write_kl_json(out_dir / "divergence.json", ids, table, combination=1,
              task_names=tasks.names)
print(f"\nwrote {out_dir / 'divergence.csv'} and {out_dir / 'divergence.json'}")
