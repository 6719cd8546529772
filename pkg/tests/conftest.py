import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20260816)


def central_diff(fn, x, step):
    """Scalar central difference d fn / dx at x."""
    return (fn(x + step) - fn(x - step)) / (2.0 * step)


def fd_param_gradient(loss_fn, arrays, step=1e-6):
    """Central-difference gradient of loss_fn() w.r.t. every entry of arrays.

    Mutates each array entry in place, calling loss_fn after each bump.
    Returns a list of gradient arrays congruent with the inputs.
    """
    grads = []
    for arr in arrays:
        g = np.zeros_like(arr)
        flat, gflat = arr.ravel(), g.ravel()
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + step
            up = loss_fn()
            flat[i] = keep - step
            dn = loss_fn()
            flat[i] = keep
            gflat[i] = (up - dn) / (2.0 * step)
        grads.append(g)
    return grads


def assert_grad_close(backprop, fd, rel_tol=1e-5, abs_floor=1e-8, scale_cut=1e-3):
    """Per-coordinate comparison: relative above scale_cut, absolute below."""
    b, f = np.asarray(backprop).ravel(), np.asarray(fd).ravel()
    scale = np.maximum(np.abs(b), np.abs(f))
    big = scale >= scale_cut
    if big.any():
        rel = np.abs(b[big] - f[big]) / scale[big]
        assert rel.max() < rel_tol, f"relative gradient deviation {rel.max():.3e}"
    small = ~big
    if small.any():
        dev = np.abs(b[small] - f[small]).max()
        assert dev < abs_floor, f"absolute gradient deviation {dev:.3e}"
