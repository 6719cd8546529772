"""Reference numpy kernels for batched MLP evaluation and backprop.

Shapes follow the layer recursion x^{l+1} = sigma(W^l x^l + b^l) with a
final affine read-out: weights[0] is (m, d_in), hidden weights are
(m, m), weights[-1] is (1, m). All arrays are float64, points are rows.
"""

import numpy as np

from .. import activations

_APPLY = {
    activations.SINE: "sine",
    activations.RELU: "relu",
    activations.CUBIC_RELU: "cubic_relu",
    activations.SIGMOID: "sigmoid",
    activations.TANH: "tanh",
}


def _act(act_id, x):
    return activations.apply(_APPLY[act_id], x)


def _dact(act_id, x):
    return activations.derivative(_APPLY[act_id], x)


def forward(x, weights, biases, act_id):
    """Network values at a batch of points; returns shape (len(x),)."""
    a = x
    for w, b in zip(weights[:-1], biases[:-1]):
        a = _act(act_id, a @ w.T + b)
    out = a @ weights[-1].T + biases[-1]
    return out[:, 0]


def forward_cache(x, weights, biases, act_id):
    """Forward pass retaining pre/post activations for backprop.

    Returns (values, pre, post): pre[l] = W^l a^l + b^l for the hidden
    layers, post[0] = x and post[l+1] = sigma(pre[l]).
    """
    pre = []
    post = [x]
    a = x
    for w, b in zip(weights[:-1], biases[:-1]):
        z = a @ w.T + b
        a = _act(act_id, z)
        pre.append(z)
        post.append(a)
    out = a @ weights[-1].T + biases[-1]
    return out[:, 0], pre, post


def backprop(weights, act_id, pre, post, upstream):
    """Gradient of sum_i upstream[i] * value_i w.r.t. every W^l, b^l.

    Reverse accumulation over the cached activations; returns congruent
    lists (dweights, dbiases).
    """
    hidden = len(pre)
    dws = [None] * (hidden + 1)
    dbs = [None] * (hidden + 1)
    u = upstream[:, None]                       # (B, 1)
    dws[-1] = u.T @ post[-1]                    # (1, m)
    dbs[-1] = np.array([upstream.sum()])
    g = u @ weights[-1]                         # d/d post[-1], (B, m)
    for l in range(hidden - 1, -1, -1):
        d = g * _dact(act_id, pre[l])           # through sigma at layer l
        dws[l] = d.T @ post[l]
        dbs[l] = d.sum(axis=0)
        if l > 0:
            g = d @ weights[l]
    return dws, dbs
