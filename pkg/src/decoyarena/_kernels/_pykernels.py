"""Pure-numpy reference implementations of the hot numeric kernels.

These define the semantics; the compiled backend in ``_ckernels.pyx`` mirrors
them operation for operation. Results agree to floating-point noise (the
compiled matmuls sum in a different order), and each backend is individually
deterministic.
"""

from __future__ import annotations

import numpy as np


def mlp_forward(x, w1, b1, w2, b2, w3, b3):
    """Fused 2-hidden-layer tanh MLP: returns (out, h1, h2)."""
    h1 = np.tanh(x @ w1 + b1)
    h2 = np.tanh(h1 @ w2 + b2)
    return h2 @ w3 + b3, h1, h2


def mlp_backward(x, h1, h2, w2, w3, dout):
    """Parameter gradients for :func:`mlp_forward` given d(loss)/d(out)."""
    dw3 = h2.T @ dout
    db3 = dout.sum(axis=0)
    dz2 = (dout @ w3.T) * (1.0 - h2 * h2)
    dw2 = h1.T @ dz2
    db2 = dz2.sum(axis=0)
    dz1 = (dz2 @ w2.T) * (1.0 - h1 * h1)
    dw1 = x.T @ dz1
    db1 = dz1.sum(axis=0)
    return dw1, db1, dw2, db2, dw3, db3


def gae_scan(rewards, values, dones, next_value, gamma, lam):
    """Generalized advantage estimation over a (T, N) rollout.

    ``dones[t, i]`` means env i's episode ended at step t, so the value of
    the following (reset) observation is masked out of the bootstrap.
    """
    T = rewards.shape[0]
    advantages = np.empty_like(rewards)
    last = np.zeros(rewards.shape[1])
    for t in range(T - 1, -1, -1):
        nonterminal = 1.0 - dones[t]
        next_values = next_value if t == T - 1 else values[t + 1]
        delta = rewards[t] + gamma * next_values * nonterminal - values[t]
        last = delta + gamma * lam * nonterminal * last
        advantages[t] = last
    return advantages, advantages + values


def categorical_from_logits(logits, u):
    """Sample one action per row by inverse CDF using the uniforms ``u``.

    Returns (actions, log-probabilities of the sampled actions).
    """
    m = logits.max(axis=1, keepdims=True)
    e = np.exp(logits - m)
    z = e.sum(axis=1)
    cumulative = np.cumsum(e, axis=1)
    actions = np.argmax(cumulative >= (u * z)[:, None], axis=1)
    rows = np.arange(logits.shape[0])
    logp = logits[rows, actions] - m[:, 0] - np.log(z)
    return actions.astype(np.int64), logp
