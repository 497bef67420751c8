"""Synthetic black-box functions and diagnostics.

The Branin family is the synthetic workload: sequences of five
functions obtained by jittering every Branin coefficient with Gaussian
perturbations of a per-sequence scale, frozen by seed. Also provides
the network-vs-task correlation heatmap used to inspect which networks
each task ended up using.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .space import Continuous, SearchSpace

__all__ = [
    "BraninParams",
    "DEFAULT_BRANIN",
    "branin",
    "branin_space",
    "SequenceSpec",
    "perturbed_sequence",
    "pearson",
    "correlation_heatmap",
]


@dataclass(frozen=True)
class BraninParams:
    a: float = 1.0
    b: float = 5.1 / (4.0 * np.pi ** 2)
    c: float = 5.0 / np.pi
    r: float = 6.0
    s: float = 10.0
    t: float = 1.0 / (8.0 * np.pi)


DEFAULT_BRANIN = BraninParams()


def branin(x1, x2, params: BraninParams = DEFAULT_BRANIN):
    """a(x2 - b x1^2 + c x1 - r)^2 + s(1 - t) cos(x1) + s."""
    p = params
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    val = p.a * (x2 - p.b * x1 ** 2 + p.c * x1 - p.r) ** 2 \
        + p.s * (1.0 - p.t) * np.cos(x1) + p.s
    return val if val.shape else float(val)


def branin_space() -> SearchSpace:
    return SearchSpace([Continuous("x1", -5.0, 10.0), Continuous("x2", 0.0, 15.0)])


@dataclass(frozen=True)
class SequenceSpec:
    sigma: float
    n_functions: int = 5
    seed: int = 0


def perturbed_sequence(spec: SequenceSpec):
    """Black-box functions f_i(point) with all six coefficients jittered.

    Perturbations are drawn once per (function, coefficient) from
    N(0, sigma^2) and frozen; the returned callables take a point
    (x1, x2) from branin_space().
    """
    rng = np.random.default_rng(spec.seed)
    fns = []
    fields = ("a", "b", "c", "r", "s", "t")
    for _ in range(spec.n_functions):
        eps = rng.normal(scale=spec.sigma, size=len(fields)) if spec.sigma > 0 \
            else np.zeros(len(fields))
        params = replace(DEFAULT_BRANIN,
                         **{f: getattr(DEFAULT_BRANIN, f) + e for f, e in zip(fields, eps)})
        fns.append(_BraninTask(params))
    return fns


class _BraninTask:
    def __init__(self, params: BraninParams):
        self.params = params

    def __call__(self, point):
        x1, x2 = point
        return branin(x1, x2, self.params)


def pearson(a, b):
    """Sample Pearson correlation; 0 (flagged) if either side is constant."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    da = a - a.mean()
    db = b - b.mean()
    denom = np.sqrt(np.sum(da * da) * np.sum(db * db))
    if denom == 0.0:
        return 0.0, True
    return float(np.sum(da * db) / denom), False


def correlation_heatmap(models, archives):
    """Network-vs-task correlation matrix masked by hardened gates.

    `models` is a list of fitted task models (one per task), `archives`
    the matching list of (X_encoded, y) acquisition arrays. Row m of
    the result holds, for each task t, the correlation between the
    m-th network output and the observed values, or 0 where the task
    does not use the network. Rows cover every network active in any
    task, in index order.
    """
    used = sorted({m for model in models for m in model._head_nets})
    T = len(models)
    H = np.zeros((len(used), T))
    for t, (model, (X, y)) in enumerate(zip(models, archives)):
        y = np.asarray(y, dtype=float)
        if len(y) < 2:
            raise ValueError(f"task {t} needs at least 2 acquisitions")
        outs = model.network_outputs(X)
        row_bits = model.gate_row()
        for i, m in enumerate(used):
            if m in outs and row_bits[m]:
                corr, _ = pearson(outs[m], y)
                H[i, t] = corr
    return H
