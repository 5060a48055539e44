"""Actor and critic networks: small tanh MLPs over flat parameter vectors.

Both nets are 2-hidden-layer MLPs whose parameters live in one contiguous
float64 vector; layer weights are reshaped views into it. That makes the
optimizer, gradient clipping, and checkpointing simple vectorized operations
over flat arrays.
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from .errors import ShapeMismatch

HIDDEN_GAIN = np.sqrt(2.0)


def orthogonal(shape: tuple[int, int], gain: float, rng: np.random.Generator) -> np.ndarray:
    """Orthogonal weight init (QR of a Gaussian, sign-corrected)."""
    rows, cols = shape
    a = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    if rows < cols:
        q = q.T
    return gain * q[:rows, :cols]


class MLP:
    """2-hidden-layer tanh MLP with a linear head, parameters in a flat vector."""

    def __init__(self, in_dim: int, hidden_dim: int, out_dim: int,
                 params: np.ndarray | None = None):
        self.in_dim = in_dim
        self.hidden_dim = hidden_dim
        self.out_dim = out_dim
        self.shapes = [
            (in_dim, hidden_dim), (hidden_dim,),
            (hidden_dim, hidden_dim), (hidden_dim,),
            (hidden_dim, out_dim), (out_dim,),
        ]
        sizes = [int(np.prod(s)) for s in self.shapes]
        self.size = sum(sizes)
        if params is None:
            params = np.zeros(self.size)
        if params.shape != (self.size,):
            raise ShapeMismatch(f"expected flat parameter vector of length {self.size}, "
                                f"got shape {params.shape}")
        self.params = params
        views = []
        offset = 0
        for shape, size in zip(self.shapes, sizes):
            views.append(params[offset:offset + size].reshape(shape))
            offset += size
        self.w1, self.b1, self.w2, self.b2, self.w3, self.b3 = views

    @classmethod
    def create(cls, in_dim: int, hidden_dim: int, out_dim: int,
               rng: np.random.Generator, final_gain: float = 1.0,
               params_out: np.ndarray | None = None) -> "MLP":
        """Orthogonal-initialized net; biases zero. ``final_gain`` scales the head."""
        net = cls(in_dim, hidden_dim, out_dim, params=params_out)
        net.w1[:] = orthogonal((in_dim, hidden_dim), HIDDEN_GAIN, rng)
        net.b1[:] = 0.0
        net.w2[:] = orthogonal((hidden_dim, hidden_dim), HIDDEN_GAIN, rng)
        net.b2[:] = 0.0
        net.w3[:] = orthogonal((hidden_dim, out_dim), final_gain, rng)
        net.b3[:] = 0.0
        return net

    def forward(self, x: np.ndarray):
        """Returns (out, cache) where cache holds the activations backward needs."""
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ShapeMismatch(f"expected (batch, {self.in_dim}) input, got {x.shape}")
        x = np.ascontiguousarray(x)
        out, h1, h2 = _kernels.mlp_forward(x, self.w1, self.b1, self.w2, self.b2,
                                           self.w3, self.b3)
        return out, (x, h1, h2)

    def backward(self, cache, dout: np.ndarray) -> np.ndarray:
        """Flat gradient vector for d(loss)/d(out) = ``dout``."""
        x, h1, h2 = cache
        grads = _kernels.mlp_backward(x, h1, h2, self.w2, self.w3,
                                      np.ascontiguousarray(dout))
        return np.concatenate([g.ravel() for g in grads])


def make_policy_net(obs_dim: int, hidden_dim: int, n_actions: int,
                    rng: np.random.Generator, params_out=None) -> MLP:
    # Small final gain keeps the initial policy near uniform.
    return MLP.create(obs_dim, hidden_dim, n_actions, rng, final_gain=0.01,
                      params_out=params_out)


def make_value_net(obs_dim: int, hidden_dim: int, rng: np.random.Generator,
                   params_out=None) -> MLP:
    return MLP.create(obs_dim, hidden_dim, 1, rng, final_gain=1.0,
                      params_out=params_out)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise log softmax, stable for extreme logits."""
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def sample_actions(logits: np.ndarray, rng: np.random.Generator):
    """Sample one action per row; returns (actions, log-probs of those actions)."""
    u = rng.random(logits.shape[0])
    return _kernels.categorical_from_logits(np.ascontiguousarray(logits), u)


def policy_sample(net: MLP, obs: np.ndarray, rng: np.random.Generator):
    """Sample an action for a single observation.

    Returns (action index, log-prob of that action, distribution entropy).
    """
    obs = np.asarray(obs, dtype=np.float64)
    if obs.shape != (net.in_dim,):
        raise ShapeMismatch(f"expected observation of shape ({net.in_dim},), got {obs.shape}")
    logits, _ = net.forward(obs[None, :])
    actions, logp_chosen = sample_actions(logits, rng)
    logp = log_softmax(logits)[0]
    entropy = -float(np.sum(np.exp(logp) * logp))
    return int(actions[0]), float(logp_chosen[0]), entropy


def policy_probabilities(net: MLP, obs: np.ndarray) -> np.ndarray:
    obs = np.asarray(obs, dtype=np.float64)
    logits, _ = net.forward(obs[None, :])
    return np.exp(log_softmax(logits)[0])
