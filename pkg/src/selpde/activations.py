"""Activation functions and their exact first derivatives.

Every activation used by the solvers is registered here once, with a
numeric id shared by the numpy and compiled kernels so both dispatch on
the same table.
"""

import numpy as np
from scipy.special import expit

# canonical tag -> kernel id; hyphenated spellings are accepted as input
SINE, RELU, CUBIC_RELU, SIGMOID, TANH = range(5)

_IDS = {
    "sine": SINE,
    "relu": RELU,
    "cubic_relu": CUBIC_RELU,
    "sigmoid": SIGMOID,
    "tanh": TANH,
}


def canonical(tag: str) -> str:
    name = tag.strip().lower().replace("-", "_")
    if name == "sin":
        name = "sine"
    if name not in _IDS:
        raise ValueError(f"unknown activation {tag!r}; expected one of {sorted(_IDS)}")
    return name


def activation_id(tag: str) -> int:
    return _IDS[canonical(tag)]


def apply(tag: str, x: np.ndarray) -> np.ndarray:
    """sigma(x), vectorized."""
    name = canonical(tag)
    if name == "sine":
        return np.sin(x)
    if name == "relu":
        return np.maximum(x, 0.0)
    if name == "cubic_relu":
        # max(x^3, 0) == relu(x)^3; avoids pow and a second comparison
        r = np.maximum(x, 0.0)
        return r * r * r
    if name == "sigmoid":
        return expit(x)
    return np.tanh(x)


def derivative(tag: str, x: np.ndarray) -> np.ndarray:
    """sigma'(x) evaluated at the pre-activation; kinks take the value 0."""
    name = canonical(tag)
    if name == "sine":
        return np.cos(x)
    if name == "relu":
        return np.where(x > 0, 1.0, 0.0)
    if name == "cubic_relu":
        r = np.maximum(x, 0.0)
        return 3.0 * r * r
    if name == "sigmoid":
        s = expit(x)
        return s * (1.0 - s)
    t = np.tanh(x)
    return 1.0 - t * t
