"""Reference optimizers: random search, per-task NN-BO, shared-network NN-BO.

All three expose the same ask/tell interface as the lifelong optimizer
so the harness can drive them interchangeably, and all consume the same
initial designs under a shared seed.
"""

from __future__ import annotations

import numpy as np

from . import bayes, nets
from .acquisition import propose_next
from .space import SearchSpace

__all__ = ["RandomSearchOptimizer", "SingleTaskNNOptimizer", "SharedNNOptimizer"]


def marginal_objective(params, X, y, log_lam, log_beta):
    """Log marginal likelihood of a single ungated network and its gradients."""
    lam = float(np.exp(log_lam))
    beta = float(np.exp(log_beta))
    phi, acts = nets.forward_cached(params, X)
    val, G_Phi, dlam, dbeta = bayes.log_marginal_grads(phi, y, lam, beta)
    g = nets.backward(params, acts, G_Phi)
    return val, g, lam * dlam, beta * dbeta


class _NNSurrogate:
    """One tanh network with a Bayesian linear head, trained by evidence ascent."""

    def __init__(self, in_dim, width=50, n_layers=3, lr=1e-2,
                 lam_init=1.0, beta_init=100.0, rng=None):
        rng = rng if rng is not None else np.random.default_rng()
        self.params = nets.init_net(in_dim, width, n_layers, rng)
        self.adam = nets.Adam(self.params, lr=lr)
        self.log_lam = float(np.log(lam_init))
        self.log_beta = float(np.log(beta_init))
        self.hyper_adam = nets.Adam([np.zeros(2)], lr=lr)
        self.y_mean, self.y_std = 0.0, 1.0
        self.head = None

    def _standardize(self, y):
        y = np.asarray(y, dtype=float)
        self.y_mean = float(np.mean(y))
        self.y_std = float(np.std(y)) or 1.0
        return (y - self.y_mean) / self.y_std

    def fit(self, X, y, steps=300):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        ys = self._standardize(y)
        for _ in range(steps):
            val, g, dll, dlb = marginal_objective(
                self.params, X, ys, self.log_lam, self.log_beta)
            if not np.isfinite(val):
                raise nets.TrainingError("non-finite marginal likelihood")
            self.params = self.adam.step(self.params, [-gi for gi in g])
            hp = self.hyper_adam.step([np.array([self.log_lam, self.log_beta])],
                                      [np.array([-dll, -dlb])])
            self.log_lam = float(np.clip(hp[0][0], -10, 12))
            self.log_beta = float(np.clip(hp[0][1], -10, 12))
        self.refresh_head(X, ys)
        return self

    def refresh_head(self, X, ys):
        phi = nets.forward(self.params, X)
        self.head = bayes.fit_posterior(phi, ys, np.exp(self.log_lam), np.exp(self.log_beta))

    def predict(self, X_enc):
        phi = nets.forward(self.params, np.atleast_2d(X_enc))
        mu, var = self.head.predict(phi)
        return mu * self.y_std + self.y_mean, var * self.y_std ** 2


class _BaseOptimizer:
    def __init__(self, space: SearchSpace, sense="min", rng=None):
        if sense not in ("min", "max"):
            raise ValueError("sense must be 'min' or 'max'")
        self.space = space
        self.sense = sense
        self.rng = rng if rng is not None else np.random.default_rng()
        self.task_id = 0
        self.X, self.y = [], []

    def start_task(self, task_id):
        self.task_id = task_id
        self.X, self.y = [], []

    def tell(self, point, y):
        self.X.append(self.space.encode(point))
        self.y.append(float(y))

    def _internal_y(self):
        y = np.asarray(self.y, dtype=float)
        return -y if self.sense == "min" else y

    def best(self):
        y = np.asarray(self.y)
        return float(np.min(y)) if self.sense == "min" else float(np.max(y))


class RandomSearchOptimizer(_BaseOptimizer):
    name = "random"

    def ask(self):
        return self.space.sample_uniform(1, self.rng)[0]


class SingleTaskNNOptimizer(_BaseOptimizer):
    """One network per task, trained from scratch; no state crosses tasks."""

    name = "single_task_nn"

    def __init__(self, space, width=50, sense="min", rng=None,
                 fit_steps=300, update_steps=30, lr=1e-2, n_candidates=10_000):
        super().__init__(space, sense, rng)
        self.width = width
        self.fit_steps = fit_steps
        self.update_steps = update_steps
        self.lr = lr
        self.n_candidates = n_candidates
        self.model = None

    def start_task(self, task_id):
        super().start_task(task_id)
        self.model = None

    def ask(self):
        X = np.asarray(self.X)
        yi = self._internal_y()
        if self.model is None:
            self.model = _NNSurrogate(self.space.width, self.width, lr=self.lr, rng=self.rng)
            self.model.fit(X, yi, steps=self.fit_steps)
        else:
            self.model.fit(X, yi, steps=self.update_steps)
        best = float(np.max(yi))
        inc = X[int(np.argmax(yi))]
        return propose_next(self.model.predict, self.space, best, X, self.rng,
                            incumbent_enc=inc, n_candidates=self.n_candidates)


class SharedNNOptimizer(_BaseOptimizer):
    """One network shared across tasks with a Bayesian head per task.

    The shared parameters maximize the sum of per-task evidences over
    all archived acquisitions; on a new task training continues from
    the previous parameters.
    """

    def __init__(self, space, width=50, sense="min", rng=None,
                 fit_steps=300, update_steps=30, lr=1e-2, n_candidates=10_000):
        super().__init__(space, sense, rng)
        self.name = f"shared_nn_{width}"
        self.width = width
        self.fit_steps = fit_steps
        self.update_steps = update_steps
        self.n_candidates = n_candidates
        self.params = nets.init_net(space.width, width, 3, self.rng)
        self.adam = nets.Adam(self.params, lr=lr)
        self.lr = lr
        self.tasks: dict[int, dict] = {}   # task -> {X, y, log_lam, log_beta, adam}
        self._fitted_once = False

    def start_task(self, task_id):
        super().start_task(task_id)
        self.tasks[task_id] = {
            "X": None, "y": None,
            "log_lam": 0.0, "log_beta": float(np.log(100.0)),
            "hyper_adam": nets.Adam([np.zeros(2)], lr=self.lr),
            "y_mean": 0.0, "y_std": 1.0, "head": None,
        }

    def tell(self, point, y):
        super().tell(point, y)
        st = self.tasks[self.task_id]
        st["X"] = np.asarray(self.X)
        yv = self._internal_y()
        st["y_mean"] = float(np.mean(yv))
        st["y_std"] = float(np.std(yv)) or 1.0
        st["y"] = (yv - st["y_mean"]) / st["y_std"]

    def _train(self, steps):
        for _ in range(steps):
            total = [np.zeros_like(p) for p in self.params]
            for st in self.tasks.values():
                if st["X"] is None:
                    continue
                phi, acts = nets.forward_cached(self.params, st["X"])
                val, G_Phi, dlam, dbeta = bayes.log_marginal_grads(
                    phi, st["y"], np.exp(st["log_lam"]), np.exp(st["log_beta"]))
                if not np.isfinite(val):
                    raise nets.TrainingError("non-finite marginal likelihood")
                g = nets.backward(self.params, acts, G_Phi)
                total = [t + gi for t, gi in zip(total, g)]
                hp = st["hyper_adam"].step(
                    [np.array([st["log_lam"], st["log_beta"]])],
                    [np.array([-np.exp(st["log_lam"]) * dlam,
                               -np.exp(st["log_beta"]) * dbeta])])
                st["log_lam"] = float(np.clip(hp[0][0], -10, 12))
                st["log_beta"] = float(np.clip(hp[0][1], -10, 12))
            self.params = self.adam.step(self.params, [-t for t in total])
        for st in self.tasks.values():
            if st["X"] is not None:
                phi = nets.forward(self.params, st["X"])
                st["head"] = bayes.fit_posterior(
                    phi, st["y"], np.exp(st["log_lam"]), np.exp(st["log_beta"]))

    def _predict_current(self, X_enc):
        st = self.tasks[self.task_id]
        phi = nets.forward(self.params, np.atleast_2d(X_enc))
        mu, var = st["head"].predict(phi)
        return mu * st["y_std"] + st["y_mean"], var * st["y_std"] ** 2

    def ask(self):
        steps = self.update_steps if self._fitted_once else self.fit_steps
        self._train(steps)
        self._fitted_once = True
        X = np.asarray(self.X)
        yi = self._internal_y()
        best = float(np.max(yi))
        inc = X[int(np.argmax(yi))]
        return propose_next(self._predict_current, self.space, best, X, self.rng,
                            incumbent_enc=inc, n_candidates=self.n_candidates)
