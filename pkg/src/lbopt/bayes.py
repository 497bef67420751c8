"""Bayesian linear regression over gated features.

Posterior, predictive distribution and the Gaussian evidence in primal
(feature-space) and dual (sample-space) form, together with evidence
gradients used by the training loops. All factorizations go through
Cholesky with a jitter-and-retry policy; no explicit inverses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

__all__ = [
    "BayesHead",
    "chol_jitter",
    "fit_posterior",
    "log_marginal_primal",
    "log_marginal_dual",
    "log_marginal",
    "log_marginal_grads",
]

LOG2PI = np.log(2.0 * np.pi)


class CholeskyError(np.linalg.LinAlgError):
    """Matrix stayed indefinite after the jitter escalation."""


def chol_jitter(A: np.ndarray):
    """Lower Cholesky factor of A, adding escalating diagonal jitter on failure.

    Jitter starts at 1e-10 * mean(diag) and grows by 10x up to 1e-4 * mean(diag).
    """
    A = np.asarray(A, dtype=float)
    try:
        return np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        pass
    scale = float(np.mean(np.diag(A)))
    if not np.isfinite(scale) or scale <= 0:
        scale = 1.0
    jit = 1e-10
    while jit <= 1e-4:
        try:
            return np.linalg.cholesky(A + jit * scale * np.eye(A.shape[0]))
        except np.linalg.LinAlgError:
            jit *= 10.0
    raise CholeskyError("matrix not positive definite after jitter escalation")


@dataclass(frozen=True)
class BayesHead:
    """Fitted posterior over the stacked output weights."""

    lam: float
    beta: float
    mean: np.ndarray          # posterior mean of the stacked head
    chol_K: np.ndarray        # lower Cholesky of K = (beta/lam) Phi^T Phi + I

    def predict(self, phi: np.ndarray):
        """Predictive mean and variance at a gated feature vector.

        Variance is the posterior model variance phi^T (beta Phi^T Phi + lam I)^-1 phi
        plus observation noise 1/beta.
        """
        phi = np.atleast_2d(np.asarray(phi, dtype=float))
        if phi.shape[1] != self.mean.shape[0]:
            raise ValueError(f"feature width {phi.shape[1]} != head width {self.mean.shape[0]}")
        mu = phi @ self.mean
        # (beta Phi'Phi + lam I)^-1 = (1/lam) K^-1
        w = solve_triangular(self.chol_K, phi.T, lower=True)
        var = (w * w).sum(axis=0) / self.lam + 1.0 / self.beta
        return mu, var


def fit_posterior(Phi: np.ndarray, y: np.ndarray, lam: float, beta: float) -> BayesHead:
    """Posterior of the head weights: N(m, K^-1) with K = (beta/lam) Phi'Phi + I."""
    if lam <= 0 or beta <= 0:
        raise ValueError("lam and beta must be positive")
    Phi = np.atleast_2d(np.asarray(Phi, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    k = Phi.shape[1]
    if Phi.shape[0] != y.shape[0]:
        raise ValueError("row count of Phi must match len(y)")
    K = (beta / lam) * (Phi.T @ Phi) + np.eye(k)
    L = chol_jitter(K)
    rhs = (beta / lam) * (Phi.T @ y)
    mean = cho_solve((L, True), rhs)
    return BayesHead(lam=float(lam), beta=float(beta), mean=mean, chol_K=L)


def log_marginal_primal(Phi, y, lam, beta) -> float:
    """Evidence via the k x k feature-space factorization."""
    Phi = np.atleast_2d(np.asarray(Phi, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    n, k = Phi.shape
    if n < 1:
        raise ValueError("need at least one row")
    K = (beta / lam) * (Phi.T @ Phi) + np.eye(k)
    L = chol_jitter(K)
    py = Phi.T @ y
    w = solve_triangular(L, py, lower=True)
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    return (-0.5 * n * np.log(2.0 * np.pi / beta)
            - 0.5 * beta * float(y @ y)
            + 0.5 * (beta ** 2 / lam) * float(w @ w)
            - 0.5 * logdet)


def log_marginal_dual(Phi, y, lam, beta) -> float:
    """Evidence as log N(y; 0, Phi Phi^T / lam + I / beta), n x n factorization."""
    Phi = np.atleast_2d(np.asarray(Phi, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    n = Phi.shape[0]
    if n < 1:
        raise ValueError("need at least one row")
    C = (Phi @ Phi.T) / lam + np.eye(n) / beta
    L = chol_jitter(C)
    w = solve_triangular(L, y, lower=True)
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    return -0.5 * (n * LOG2PI + logdet + float(w @ w))


def log_marginal(Phi, y, lam, beta) -> float:
    """Dispatch on size: primal when n > k, else dual."""
    Phi = np.atleast_2d(np.asarray(Phi, dtype=float))
    n, k = Phi.shape
    if n > k:
        return log_marginal_primal(Phi, y, lam, beta)
    return log_marginal_dual(Phi, y, lam, beta)


def log_marginal_grads(Phi, y, lam, beta):
    """Evidence value and gradients w.r.t. Phi, lam and beta.

    Returns (value, G_Phi, dlam, dbeta). Uses the n x n route when
    n <= k and the k x k (Woodbury) route otherwise, so the larger
    side is never factorized.
    """
    Phi = np.atleast_2d(np.asarray(Phi, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    n, k = Phi.shape
    if k == 0:
        # pure-noise model: C = I/beta
        val = -0.5 * n * np.log(2.0 * np.pi / beta) - 0.5 * beta * float(y @ y)
        dbeta = 0.5 * n / beta - 0.5 * float(y @ y)
        return val, np.zeros((n, 0)), 0.0, dbeta

    if n <= k:
        C = (Phi @ Phi.T) / lam + np.eye(n) / beta
        L = chol_jitter(C)
        a = cho_solve((L, True), y)
        B = cho_solve((L, True), Phi)          # C^-1 Phi
        logdet = 2.0 * np.sum(np.log(np.diag(L)))
        val = -0.5 * (n * LOG2PI + logdet + float(y @ a))
        Linv = solve_triangular(L, np.eye(n), lower=True)
        tr_Cinv = float(np.sum(Linv * Linv))
        tr_PtB = float(np.sum(Phi * B))
    else:
        K = (beta / lam) * (Phi.T @ Phi) + np.eye(k)
        L = chol_jitter(K)
        py = Phi.T @ y
        Kinv_py = cho_solve((L, True), py)
        a = beta * (y - (beta / lam) * (Phi @ Kinv_py))      # C^-1 y
        B = beta * cho_solve((L, True), Phi.T).T             # C^-1 Phi = beta Phi K^-1
        logdet = 2.0 * np.sum(np.log(np.diag(L)))
        val = (-0.5 * n * np.log(2.0 * np.pi / beta)
               - 0.5 * beta * float(y @ y)
               + 0.5 * (beta ** 2 / lam) * float(py @ Kinv_py)
               - 0.5 * logdet)
        tr_PtB = float(np.sum(Phi * B))
        tr_Cinv = beta * (n - tr_PtB / lam)
    pa = Phi.T @ a
    G_Phi = (np.outer(a, pa) - B) / lam
    # dL/dtheta = 0.5 a' (dC/dtheta) a - 0.5 tr(C^-1 dC/dtheta)
    dlam = -0.5 / lam ** 2 * (float(pa @ pa) - tr_PtB)
    dbeta = -0.5 / beta ** 2 * (float(a @ a) - tr_Cinv)
    return val, G_Phi, dlam, dbeta
