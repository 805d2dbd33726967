"""Fit per-embodiment grasp models from labeled demonstrations.

Synthesizes demonstration clusters for a robot gripper and for the operator
("human"), fits one Gaussian class per task combination with soft EM, and
saves both model files for the later demos.
"""

from pathlib import Path

import numpy as np

from telegrasp import fit_em, save_model
from telegrasp.model import FitConfig

from common import CLUSTER_MEANS, TASKS, synthetic_demonstrations

out_dir = Path(__file__).parent / "output" / "models"
out_dir.mkdir(parents=True, exist_ok=True)

# the gripper holds the handover-adjacent grasps its own way: higher above
# the table, different finger split
robot_overrides = {
    0b100: CLUSTER_MEANS[0b100] + [0.0, -0.1, 0.12, 0.0, 0.0, 0.0, 0.3, -0.2, 0.1],
    0b101: CLUSTER_MEANS[0b101] + [0.0, 0.08, 0.10, 0.0, 0.0, 0.0, -0.15, 0.25, 0.2],
}

config = FitConfig(store_responsibilities=False)
for embodiment, seed, shift, scale, overrides in (
    ("three-finger", 7, 0.0, 0.04, robot_overrides),
    ("human", 11, 0.03, 0.06, None),
):
    demos = synthetic_demonstrations(embodiment, seed, shift=shift, scale=scale,
                                     overrides=overrides)
    model = fit_em(demos, TASKS, config, n_apertures=3)
    path = out_dir / f"{embodiment}.json"
    save_model(model, path)

    meta = model.fit_meta
    print(f"{embodiment}: {len(demos)} samples -> {len(model.classes)} classes")
    print(f"  iterations={meta.iterations} converged={meta.converged} "
          f"log-likelihood={meta.final_log_likelihood:.2f}")
    for c in model.classes:
        sigma = np.sqrt(np.diag(c.covariance))
        print(f"  {TASKS.label(c.combination):<18} prior={c.prior:.3f} "
              f"mean apertures={np.round(c.mean[6:], 2)} "
              f"sigma range=[{sigma.min():.3f}, {sigma.max():.3f}]")
    print(f"  saved to {path}\n")
