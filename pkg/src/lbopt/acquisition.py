"""Expected Improvement scoring and next-point proposal.

All scoring happens in maximization orientation; optimizers that
minimize negate observations before calling in here.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy.stats import norm

from .space import SearchSpace

__all__ = ["expected_improvement", "propose_next", "initial_design"]

DUPLICATE_TOL = 1e-9


def expected_improvement(mu, sigma, best):
    """EI = E[max(f - best, 0)] under N(mu, sigma^2); sigma may be 0."""
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma < 0):
        raise ValueError("sigma must be >= 0")
    diff = mu - best
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.where(sigma > 0, diff / np.where(sigma > 0, sigma, 1.0), 0.0)
        ei = np.where(sigma > 0,
                      diff * norm.cdf(u) + sigma * norm.pdf(u),
                      np.maximum(diff, 0.0))
    return ei


def initial_design(space: SearchSpace, n: int, rng: np.random.Generator):
    """Uniform start-up points; the harness reuses one seed across optimizers."""
    return space.sample_uniform(n, rng)


def propose_next(predict, space: SearchSpace, best: float,
                 archive_enc: np.ndarray | None,
                 rng: np.random.Generator,
                 incumbent_enc: np.ndarray | None = None,
                 n_candidates: int = 10_000,
                 jitter: float = 0.05):
    """EI-argmax over a random candidate pool.

    `predict` maps an (n, width) encoded batch to (mu, var) in the
    maximization orientation. 10% of the pool are Gaussian-jittered
    copies of the incumbent (in encoded space, clipped to [0,1]).
    A proposal that collides with an archived point is redrawn once.
    """
    n_jit = n_candidates // 10 if incumbent_enc is not None else 0
    pool_pts = space.sample_uniform(n_candidates - n_jit, rng)
    enc = space.encode_many(pool_pts)
    if n_jit:
        jit = incumbent_enc + rng.normal(scale=jitter, size=(n_jit, space.width))
        enc = np.vstack([enc, np.clip(jit, 0.0, 1.0)])
    # re-encode through decode so integer/categorical candidates are feasible points
    cand_pts = [space.decode(e) for e in enc]
    enc = space.encode_many(cand_pts)

    mu, var = predict(enc)
    scores = expected_improvement(mu, np.sqrt(np.maximum(var, 0.0)), best)
    order = np.argsort(scores)[::-1]
    choice = int(order[0])
    if archive_enc is not None and len(archive_enc) and _is_duplicate(enc[choice], archive_enc):
        redraw = space.sample_uniform(1, rng)[0]
        if _is_duplicate(space.encode(redraw), archive_enc):
            warnings.warn("proposed point duplicates an archived acquisition")
        return redraw
    return cand_pts[choice]


def _is_duplicate(e, archive_enc):
    d = np.max(np.abs(np.asarray(archive_enc) - e), axis=1)
    return bool(np.any(d < DUPLICATE_TOL))
