"""Tanh multilayer perceptron feature maps with hand-rolled backprop and Adam.

Each network maps an encoded point to a feature vector whose components
lie in (-1, 1). Parameters are stored as a flat list
[W1, b1, W2, b2, ...] so optimizer state and snapshots stay simple
array lists.
"""

from __future__ import annotations

import numpy as np

__all__ = ["init_net", "forward", "forward_cached", "backward", "Adam", "TrainingError"]


class TrainingError(RuntimeError):
    """Non-finite quantities encountered during training."""


def init_net(in_dim: int, width: int = 50, n_layers: int = 3,
             rng: np.random.Generator | None = None) -> list:
    """Fresh network parameters, Glorot-uniform weights and zero biases."""
    rng = rng if rng is not None else np.random.default_rng()
    params = []
    d = in_dim
    for _ in range(n_layers):
        limit = np.sqrt(6.0 / (d + width))
        params.append(rng.uniform(-limit, limit, size=(d, width)))
        params.append(np.zeros(width))
        d = width
    return params


def forward(params: list, X: np.ndarray) -> np.ndarray:
    """Feature map for a batch X of shape (N, in_dim). Pure."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != params[0].shape[0]:
        raise ValueError(f"input width {X.shape[1]} != net input width {params[0].shape[0]}")
    h = X
    for W, b in zip(params[::2], params[1::2]):
        h = np.tanh(h @ W + b)
    return h


def forward_cached(params: list, X: np.ndarray):
    """Forward pass keeping per-layer activations for backprop."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != params[0].shape[0]:
        raise ValueError(f"input width {X.shape[1]} != net input width {params[0].shape[0]}")
    acts = [X]
    h = X
    for W, b in zip(params[::2], params[1::2]):
        h = np.tanh(h @ W + b)
        acts.append(h)
    return h, acts


def backward(params: list, acts: list, upstream: np.ndarray) -> list:
    """Gradients of sum(upstream * phi(X)) w.r.t. every parameter.

    `acts` is the activation list from forward_cached; `upstream` has
    the shape of the output (N, width).
    """
    grads = [None] * len(params)
    delta = np.atleast_2d(upstream)
    for layer in range(len(params) // 2 - 1, -1, -1):
        h_out = acts[layer + 1]
        h_in = acts[layer]
        delta = delta * (1.0 - h_out * h_out)  # through tanh
        grads[2 * layer] = h_in.T @ delta
        grads[2 * layer + 1] = delta.sum(axis=0)
        if layer > 0:
            delta = delta @ params[2 * layer].T
    return grads


class Adam:
    """Standard Adam with bias correction over a list of arrays."""

    def __init__(self, params: list, lr: float = 1e-2, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params: list, grads: list) -> list:
        """One descent step; returns updated parameters (inputs untouched)."""
        for g in grads:
            if not np.all(np.isfinite(g)):
                raise TrainingError("non-finite gradient in Adam step")
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        out = []
        for i, (p, g) in enumerate(zip(params, grads)):
            self.m[i] = self.beta1 * self.m[i] + (1 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1 - self.beta2) * g * g
            mhat = self.m[i] / c1
            vhat = self.v[i] / c2
            out.append(p - self.lr * mhat / (np.sqrt(vhat) + self.eps))
        return out
