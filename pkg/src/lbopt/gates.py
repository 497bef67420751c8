"""Stick-breaking gate prior and its Binary Concrete relaxation.

The prior over which networks a task uses is an IBP stick-breaking
construction: usage probabilities pi_m are cumulative products of
Beta(alpha, 1) sticks. The variational posterior per gate is a Binary
Concrete distribution with probability ratio gamma and temperature tau;
sampling is reparametrized through a uniform so gradients flow to gamma.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "sample_sticks",
    "gate_from_uniform",
    "sample_gate",
    "concrete_log_density",
    "concrete_terms",
    "kl_estimate",
    "kl_terms",
    "prior_ratio",
    "harden",
    "active_count",
]

PI_CLIP = 1e-6


def sample_sticks(alpha: float, M: int, rng: np.random.Generator):
    """Draw sticks v_k ~ Beta(alpha, 1) and probabilities pi_m = prod v_k."""
    if alpha <= 0 or M < 1:
        raise ValueError("need alpha > 0 and M >= 1")
    v = rng.beta(alpha, 1.0, size=M)
    pi = np.cumprod(v)
    return v, pi


def prior_ratio(pi: np.ndarray) -> np.ndarray:
    """Bernoulli probabilities to Concrete ratios pi/(1-pi), clamped for stability."""
    pi = np.clip(np.asarray(pi, dtype=float), PI_CLIP, 1.0 - PI_CLIP)
    return pi / (1.0 - pi)


def gate_from_uniform(gamma, u, tau):
    """Relaxed gate z = sigmoid((log gamma + log u - log(1-u)) / tau)."""
    s = (np.log(gamma) + np.log(u) - np.log1p(-u)) / tau
    return _sigmoid(s)


def sample_gate(gamma, tau, rng: np.random.Generator):
    if np.any(np.asarray(gamma) <= 0) or tau <= 0:
        raise ValueError("gamma and tau must be positive")
    u = rng.uniform(size=np.shape(gamma)) if np.ndim(gamma) else rng.uniform()
    # guard the open interval for the logit
    u = np.clip(u, 1e-12, 1.0 - 1e-12)
    return gate_from_uniform(gamma, u, tau)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=float)))


def concrete_log_density(z, gamma, tau):
    """log BinConcrete(z; gamma, tau), evaluated via logit-space algebra."""
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0.0) or np.any(z >= 1.0):
        raise ValueError("z must lie strictly inside (0, 1)")
    val, _, _ = concrete_terms(z, gamma, tau)
    return val


def concrete_log_density_logit(s, gamma, tau):
    """log density of logit(z) for z ~ BinConcrete(gamma, tau).

    Same distribution under the change of variable s = logit(z); at low
    temperature the mass sits closer to {0, 1} than float64 epsilon, so
    normalization checks must integrate in this parametrization.
    """
    x = tau * np.asarray(s, dtype=float) - np.log(gamma)
    return np.log(tau) - x - 2.0 * np.logaddexp(0.0, -x)


def concrete_terms(z, gamma, tau):
    """log density plus its derivatives in z and log gamma.

    Returns (logpdf, dlogpdf_dz, dlogpdf_dloggamma), all vectorized.
    """
    z = np.asarray(z, dtype=float)
    g = np.log(gamma)
    s = np.log(z) - np.log1p(-z)
    x = g - tau * s
    sig = _sigmoid(x)
    # log p = g + log tau - (tau+1) log z + (tau-1) log(1-z) - 2 log(1+e^x)
    logpdf = g + np.log(tau) - (tau + 1.0) * np.log(z) + (tau - 1.0) * np.log1p(-z) \
        - 2.0 * np.logaddexp(0.0, x)
    dz = -(tau + 1.0) / z - (tau - 1.0) / (1.0 - z) + 2.0 * tau * sig / (z * (1.0 - z))
    dg = 1.0 - 2.0 * sig
    return logpdf, dz, dg


def kl_terms(gammas, pi, tau, u):
    """Single-sample KL estimate and its gradient in log gamma.

    The prior Bernoulli(pi_m) is relaxed to BinConcrete(pi/(1-pi), tau).
    Common random numbers: u is the uniform vector reused by the caller.
    Returns (kl, dkl_dloggamma, z).
    """
    gammas = np.asarray(gammas, dtype=float)
    z = gate_from_uniform(gammas, u, tau)
    z = np.clip(z, 1e-12, 1.0 - 1e-12)
    rho = prior_ratio(pi)
    lq, dq_dz, dq_dg = concrete_terms(z, gammas, tau)
    lp, dp_dz, _ = concrete_terms(z, rho, tau)
    kl = float(np.sum(lq - lp))
    dz_dlg = z * (1.0 - z) / tau
    dkl = (dq_dz - dp_dz) * dz_dlg + dq_dg
    return kl, dkl, z


def kl_estimate(gammas, pi, tau, rng: np.random.Generator, n_samples: int = 1) -> float:
    """Monte-Carlo KL[Q(Z) || P(Z|v)] with the relaxed prior."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    gammas = np.asarray(gammas, dtype=float)
    total = 0.0
    for _ in range(n_samples):
        u = np.clip(rng.uniform(size=gammas.shape), 1e-12, 1 - 1e-12)
        kl, _, _ = kl_terms(gammas, pi, tau, u)
        total += kl
    return total / n_samples


def harden(gammas) -> np.ndarray:
    """Binary gate row: active iff gamma > 1 (posterior usage probability > 1/2)."""
    return (np.asarray(gammas, dtype=float) > 1.0).astype(int)


def active_count(Z_archive) -> int:
    """Number of networks used by any task: column-wise any over the archive."""
    Z = np.atleast_2d(np.asarray(Z_archive))
    if Z.size == 0:
        return 0
    return int(np.sum(Z.any(axis=0)))
