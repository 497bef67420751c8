"""
Single-task Bayesian optimization on Branin
===========================================

Minimize the Branin function with the lifelong optimizer used as a
plain single-task BO loop: a handful of random points, then ask/tell
with Expected Improvement over the neural-basis surrogate.
"""

import numpy as np

from lbopt import LBOConfig, LBOOptimizer
from lbopt.benchmarks import branin, branin_space

space = branin_space()

# modest training schedule, enough for a clean demo run
config = LBOConfig(M=4, feat_dim=20, n_steps=200, update_steps=15,
                   plateau=30, reg_weight=1e-3, n_candidates=2000)

opt = LBOOptimizer(space, config, sense="min", rng=np.random.default_rng(0))
opt.start_task(1)

# seed the archive with 5 uniform points
for p in space.sample_uniform(5, np.random.default_rng(1)):
    opt.tell(p, branin(*p))

for i in range(45):
    p = opt.ask()
    y = branin(*p)
    opt.tell(p, y)
    if (i + 1) % 5 == 0:
        print(f"eval {i + 6:3d}  y={y:8.3f}  best={opt.best():7.4f}")

print(f"\nbest found: {opt.best():.4f}  (global minimum 0.3979)")
print("hardened gate row:", opt.model.gate_row())
