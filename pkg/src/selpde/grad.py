"""Parameter gradients by reverse accumulation over cached activations.

Spatial derivatives never go through this module; they are finite
differences (see operators). Here the only differentiation is with
respect to weights and biases, for a loss that is a per-point weighted
sum of network outputs: given upstream sensitivities dJ/d(value_i), the
backward pass returns dJ/d(W^l), dJ/d(b^l).
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from . import _kernels, activations, net as net_mod

# Rows of stencil points processed per backprop chunk. Bounds peak cache
# memory (chunk * width * (depth+4) doubles) while keeping dgemm batches large.
CHUNK_ROWS = 32768


@dataclass
class ForwardCache:
    """Pre/post activations of one forward pass; post[0] is the input batch."""

    pre: list
    post: list
    values: np.ndarray

    @property
    def layer_count(self):
        return len(self.post)

    def replay_output(self, network):
        """Recompute the read-out from the cached last hidden layer."""
        out = self.post[-1] @ network.weights[-1].T + network.biases[-1]
        return out[:, 0]


@dataclass
class ParameterGradient:
    weights: list
    biases: list

    @classmethod
    def zeros_like(cls, network):
        return cls(
            [np.zeros_like(w) for w in network.weights],
            [np.zeros_like(b) for b in network.biases],
        )

    def accumulate(self, other):
        for a, b in zip(self.weights, other.weights):
            a += b
        for a, b in zip(self.biases, other.biases):
            a += b
        return self

    def arrays(self):
        return self.weights + self.biases


def forward_with_cache(network, points) -> ForwardCache:
    points = net_mod._check_points(network, points)
    values, pre, post = _kernels.forward_cache(
        points, network.weights, network.biases,
        activations.activation_id(network.activation),
    )
    return ForwardCache(pre=pre, post=post, values=values)


def backprop_params(network, cache: ForwardCache, upstream) -> ParameterGradient:
    """Gradient of sum_i upstream[i] * value_i with respect to parameters."""
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != cache.values.shape:
        raise ValueError(
            f"upstream shape {upstream.shape} != cached batch {cache.values.shape}"
        )
    if len(cache.post) != network.shape.depth + 1:
        raise ValueError("cache does not match network depth")
    if cache.post[0].shape[1] != network.shape.input_dim:
        raise ValueError("cache does not match network input dimension")
    dws, dbs = _kernels.backprop(
        network.weights, activations.activation_id(network.activation),
        cache.pre, cache.post, upstream,
    )
    return ParameterGradient(dws, dbs)


def network_gradient(network, points, upstream, chunk=CHUNK_ROWS) -> ParameterGradient:
    """Chunked forward+backprop for large stencil batches; exact sum of chunks."""
    points = np.asarray(points, dtype=np.float64)
    upstream = np.asarray(upstream, dtype=np.float64)
    total = ParameterGradient.zeros_like(network)
    for lo in range(0, len(points), chunk):
        part = slice(lo, lo + chunk)
        cache = forward_with_cache(network, points[part])
        total.accumulate(backprop_params(network, cache, upstream[part]))
    return total


def ansatz_gradient(ansatz, points, upstream, chunk=CHUNK_ROWS) -> ParameterGradient:
    """Gradient through u = mask * core: the mask scales each upstream."""
    if ansatz.mask != "none":
        upstream = upstream * net_mod.mask_values(ansatz.mask, points)
    return network_gradient(ansatz.core, points, upstream, chunk)


def selection_gradient(sel, points, d_phi, chunk=CHUNK_ROWS) -> ParameterGradient:
    """Gradient of sum_i d_phi[i] * phi_s(x_i) w.r.t. the core parameters.

    phi_s = m0 + (M0-m0) sigmoid(z); the band clamp (net.selection_forward)
    only binds where sigmoid' has underflowed, so it needs no special case.
    """
    points = np.asarray(points, dtype=np.float64)
    d_phi = np.asarray(d_phi, dtype=np.float64)
    total = ParameterGradient.zeros_like(sel.core)
    span = sel.M0 - sel.m0
    for lo in range(0, len(points), chunk):
        part = slice(lo, lo + chunk)
        cache = forward_with_cache(sel.core, points[part])
        s = expit(cache.values)
        total.accumulate(
            backprop_params(sel.core, cache, d_phi[part] * span * s * (1.0 - s))
        )
    return total
