"""
Optimizing an external black box over the line protocol
=======================================================

Any executable that answers JSON lines on stdout can serve as the
objective. Here the evaluator is a tiny inline Python child process
computing a shifted quadratic; the optimizer never sees the formula.

    request:  {"id": 0, "point": {"x": 0.2, "y": -1.0}}
    response: {"id": 0, "y": 1.53}
"""

import sys

import numpy as np

from lbopt import LBOConfig, LBOOptimizer
from lbopt.external import ExternalBlackBox
from lbopt.space import Continuous, SearchSpace

space = SearchSpace([Continuous("x", -2.0, 2.0), Continuous("y", -2.0, 2.0)])

EVALUATOR = r"""
import json, sys
for line in sys.stdin:
    req = json.loads(line)
    p = req["point"]
    val = (p["x"] - 0.5) ** 2 + (p["y"] + 1.0) ** 2
    print(json.dumps({"id": req["id"], "y": val}))
    sys.stdout.flush()
"""

config = LBOConfig(M=3, feat_dim=15, n_steps=150, update_steps=10,
                   plateau=30, reg_weight=1e-3, n_candidates=1000)

with ExternalBlackBox([sys.executable, "-c", EVALUATOR], space) as f:
    opt = LBOOptimizer(space, config, sense="min", rng=np.random.default_rng(0))
    opt.start_task(1)
    for p in space.sample_uniform(5, np.random.default_rng(1)):
        opt.tell(p, f(p))
    for _ in range(25):
        p = opt.ask()
        opt.tell(p, f(p))

print(f"best value {opt.best():.4f} (true minimum 0 at x=0.5, y=-1)")
