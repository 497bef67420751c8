"""
Lifelong optimization over a sequence of related tasks
======================================================

Five perturbed Branin functions arrive one after another. The
optimizer snapshots the networks each finished task used and warm
starts the next task from them, so later tasks need fewer evaluations.
At the end we print the task-by-network gate matrix and the
network-output vs task-value correlation heatmap.
"""

import numpy as np

from lbopt import LBOConfig, LBOOptimizer
from lbopt.benchmarks import (SequenceSpec, branin_space, correlation_heatmap,
                              perturbed_sequence)

space = branin_space()
fns = perturbed_sequence(SequenceSpec(sigma=0.01, seed=3))

config = LBOConfig(M=6, feat_dim=20, n_steps=200, update_steps=10,
                   plateau=30, reg_weight=1e-2, n_candidates=2000)
opt = LBOOptimizer(space, config, sense="min", rng=np.random.default_rng(0))

models, archives = [], []
for t, f in enumerate(fns, start=1):
    opt.start_task(t)
    Xs, ys = [], []
    for p in space.sample_uniform(5, np.random.default_rng(t)):
        opt.tell(p, f(p))
        Xs.append(space.encode(p)); ys.append(f(p))
    for _ in range(25):
        p = opt.ask()
        y = f(p)
        opt.tell(p, y)
        Xs.append(space.encode(p)); ys.append(y)
    print(f"task {t}: best {opt.best():7.4f}  gates {opt.model.gate_row()}")
    models.append(opt.model)
    # engine maximizes, so archives carry the negated values
    archives.append((np.asarray(Xs), -np.asarray(ys)))

print("\ngate matrix (tasks x networks):")
print(opt.store.gate_matrix(config.M))
print("networks ever activated:", opt.store.active_count(config.M))

H = correlation_heatmap(models, archives)
print("\ncorrelation heatmap (active networks x tasks):")
print(np.round(H, 2))
