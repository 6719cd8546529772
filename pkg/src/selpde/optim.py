"""Diagonal-accumulator optimizers and the staircase learning rate.

AdaGrad is the default: acc += g^2, step = rate * g / (sqrt(acc) + 1e-8),
subtracted for descent and added for ascent (the selection networks
maximize the same objective the solution network minimizes). Adam is
available behind a config switch.
"""

from dataclasses import dataclass

import numpy as np

DELTA_NUM = 1e-8


@dataclass
class AdaGradState:
    acc: list

    @classmethod
    def for_network(cls, network):
        return cls([np.zeros_like(p) for p in network.parameters()])


def adagrad_step(network, gradient, state: AdaGradState, rate, ascent=False):
    """In-place parameter update; returns the network for convenience."""
    sign = 1.0 if ascent else -1.0
    for p, g, acc in zip(network.parameters(), gradient.arrays(), state.acc):
        acc += g * g
        p += sign * rate * g / (np.sqrt(acc) + DELTA_NUM)
    return network


@dataclass
class AdamState:
    m: list
    v: list
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999

    @classmethod
    def for_network(cls, network):
        params = network.parameters()
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params])


def adam_step(network, gradient, state: AdamState, rate, ascent=False):
    sign = 1.0 if ascent else -1.0
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    corr1 = 1.0 - b1**state.t
    corr2 = 1.0 - b2**state.t
    for p, g, m, v in zip(network.parameters(), gradient.arrays(), state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p += sign * rate * (m / corr1) / (np.sqrt(v / corr2) + DELTA_NUM)
    return network


OPTIMIZERS = {
    "adagrad": (AdaGradState.for_network, adagrad_step),
    "adam": (AdamState.for_network, adam_step),
}


@dataclass(frozen=True)
class ScheduleSpec:
    """Piecewise-constant rate: 10^(-3 - 3j/1000) on the j-th of 1000
    equal segments of [1, n]; decays from 1e-3 to 10^-5.997.

    With a floor, the staircase spans the first floor_after iterations
    (landing near 1e-6) and the rate stays at floor_rate afterwards.
    """

    n: int
    floor_after: int = 0  # 0 disables the floor
    floor_rate: float = 1e-6

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"schedule needs n >= 1, got {self.n}")
        if self.floor_after < 0:
            raise ValueError("floor_after must be nonnegative")

    def rate(self, k: int) -> float:
        if not (1 <= k <= self.n):
            raise ValueError(f"iteration {k} outside [1, {self.n}]")
        if self.floor_after and k > self.floor_after:
            return self.floor_rate
        span = self.floor_after if self.floor_after else self.n
        j = (1000 * k + span - 1) // span - 1  # ceil(1000 k / span) - 1
        j = min(j, 999)
        return 10.0 ** (-3.0 - 3.0 * j / 1000.0)


def lr_schedule(k: int, n: int) -> float:
    return ScheduleSpec(n).rate(k)
