"""Fully connected networks, bounded selection networks, and ansatz wrappers.

The solution network is a plain MLP phi(x; theta). It can be wrapped in a
boundary-conforming ansatz that multiplies by a factor vanishing on the
domain boundary, so homogeneous Dirichlet data holds by construction.
Selection networks share the MLP core but squash the output into a fixed
band (m0, M0) so the weights they produce stay bounded away from 0 and
infinity during the inner maximization.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from . import _kernels, activations

MASKS = ("none", "ball", "cube")


@dataclass(frozen=True)
class NetworkShape:
    input_dim: int
    width: int
    depth: int  # number of activated layers; depth+1 affine maps in total

    def __post_init__(self):
        if self.input_dim < 1 or self.width < 1 or self.depth < 1:
            raise ValueError(f"network shape must be positive, got {self}")

    def layer_dims(self):
        """(fan_in, fan_out) of each affine map, input to output."""
        dims = [(self.input_dim, self.width)]
        dims += [(self.width, self.width)] * (self.depth - 1)
        dims.append((self.width, 1))
        return dims


@dataclass
class MlpNetwork:
    shape: NetworkShape
    activation: str
    weights: list = field(repr=False)
    biases: list = field(repr=False)

    def values(self, points):
        return forward(self, points)

    def parameters(self):
        return self.weights + self.biases


def init_network(shape: NetworkShape, activation: str, seed: int) -> MlpNetwork:
    """Zero biases; weights ~ N(0, 2/(fan_in+fan_out)). Deterministic in seed."""
    activation = activations.canonical(activation)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    weights, biases = [], []
    for fan_in, fan_out in shape.layer_dims():
        scale = np.sqrt(2.0 / (fan_in + fan_out))
        weights.append(rng.normal(0.0, scale, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpNetwork(shape, activation, weights, biases)


def _check_points(net, points):
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != net.shape.input_dim:
        raise ValueError(
            f"points must be (n, {net.shape.input_dim}), got {points.shape}"
        )
    return np.ascontiguousarray(points)


def forward(net: MlpNetwork, points) -> np.ndarray:
    points = _check_points(net, points)
    if len(points) == 0:
        return np.zeros(0)
    return _kernels.forward(
        points, net.weights, net.biases, activations.activation_id(net.activation)
    )


def mask_values(mask: str, points) -> np.ndarray:
    """Boundary-vanishing factor: ball (|x|^2 - 1), cube prod_i (x_i^2 - 1)."""
    points = np.asarray(points)
    if mask == "ball":
        return (points * points).sum(axis=1) - 1.0
    if mask == "cube":
        return (points * points - 1.0).prod(axis=1)
    raise ValueError(f"unknown mask {mask!r}")


@dataclass
class SolutionAnsatz:
    core: MlpNetwork
    mask: str = "none"

    def __post_init__(self):
        if self.mask not in MASKS:
            raise ValueError(f"mask must be one of {MASKS}, got {self.mask!r}")

    def values(self, points):
        return ansatz_forward(self, points)


def ansatz_forward(ansatz: SolutionAnsatz, points) -> np.ndarray:
    vals = forward(ansatz.core, points)
    if ansatz.mask == "none":
        return vals
    return mask_values(ansatz.mask, np.asarray(points, dtype=np.float64)) * vals


@dataclass
class ExactFunction:
    """Ansatz stand-in wrapping a known function, for accuracy probes."""

    fn: object

    def values(self, points):
        return np.asarray(self.fn(np.asarray(points, dtype=np.float64)), dtype=np.float64)


@dataclass
class SelectionNetwork:
    core: MlpNetwork
    m0: float = 0.8
    M0: float = 5.0

    def __post_init__(self):
        if not (self.M0 > 1.0 > self.m0 >= 0.0):
            raise ValueError(f"selection bounds need M0 > 1 > m0 >= 0, got {self}")

    def values(self, points):
        return selection_forward(self, points)


def selection_forward(sel: SelectionNetwork, points) -> np.ndarray:
    """m0 + (M0-m0) * sigmoid(core), kept strictly inside (m0, M0).

    The sigmoid saturates to exactly 0/1 in float64 for |core| beyond
    ~37, which would put the output on the band edge; clamp to the
    nearest representable interior value instead.
    """
    z = forward(sel.core, points)
    out = sel.m0 + (sel.M0 - sel.m0) * expit(z)
    lo = np.nextafter(sel.m0, sel.M0)
    hi = np.nextafter(sel.M0, sel.m0)
    return np.clip(out, lo, hi)
