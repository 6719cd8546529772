# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled batched-MLP kernels.

Affine maps go through BLAS dgemm; bias addition, activations, and
activation-derivative products are fused single passes, which is where
the numpy fallback spends several extra memory sweeps per layer. The
semantics match selpde._kernels.numpy_impl exactly.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, exp, sin, tanh
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()

cdef enum:
    ACT_SINE = 0
    ACT_RELU = 1
    ACT_CUBIC = 2
    ACT_SIGMOID = 3
    ACT_TANH = 4


cdef inline double _act_one(double z, int act) noexcept nogil:
    if act == ACT_SINE:
        return sin(z)
    elif act == ACT_RELU:
        return z if z > 0.0 else 0.0
    elif act == ACT_CUBIC:
        return z * z * z if z > 0.0 else 0.0
    elif act == ACT_SIGMOID:
        if z >= 0.0:
            return 1.0 / (1.0 + exp(-z))
        else:
            return exp(z) / (1.0 + exp(z))
    else:
        return tanh(z)


cdef inline double _dact_one(double z, int act) noexcept nogil:
    cdef double s
    if act == ACT_SINE:
        return cos(z)
    elif act == ACT_RELU:
        return 1.0 if z > 0.0 else 0.0
    elif act == ACT_CUBIC:
        return 3.0 * z * z if z > 0.0 else 0.0
    elif act == ACT_SIGMOID:
        if z >= 0.0:
            s = 1.0 / (1.0 + exp(-z))
        else:
            s = exp(z) / (1.0 + exp(z))
        return s * (1.0 - s)
    else:
        s = tanh(z)
        return 1.0 - s * s


# Row-major matmuls through column-major dgemm. With X_rm (p x q) read as
# the column-major X_cm (q x p), C = A @ W^T becomes Cc = Wc^T Ac, etc.

cdef void _abt(double[:, ::1] A, double[:, ::1] W, double[:, ::1] C) noexcept nogil:
    # C (B x m) = A (B x k) @ W (m x k)^T
    cdef int B = <int> A.shape[0], k = <int> A.shape[1], m = <int> W.shape[0]
    cdef double one = 1.0, zero = 0.0
    cdef char t = b'T', n = b'N'
    if B == 0:
        return
    dgemm(&t, &n, &m, &B, &k, &one, &W[0, 0], &k, &A[0, 0], &k, &zero, &C[0, 0], &m)


cdef void _ab(double[:, ::1] D, double[:, ::1] W, double[:, ::1] C) noexcept nogil:
    # C (B x k) = D (B x m) @ W (m x k)
    cdef int B = <int> D.shape[0], m = <int> D.shape[1], k = <int> W.shape[1]
    cdef double one = 1.0, zero = 0.0
    cdef char n = b'N'
    if B == 0:
        return
    dgemm(&n, &n, &k, &B, &m, &one, &W[0, 0], &k, &D[0, 0], &m, &zero, &C[0, 0], &k)


cdef void _atb(double[:, ::1] D, double[:, ::1] P, double[:, ::1] dW) noexcept nogil:
    # dW (m x k) = D (B x m)^T @ P (B x k)
    cdef int B = <int> D.shape[0], m = <int> D.shape[1], k = <int> P.shape[1]
    cdef double one = 1.0, zero = 0.0
    cdef char t = b'T', n = b'N'
    if B == 0:
        dW[:, :] = 0.0
        return
    dgemm(&n, &t, &k, &m, &B, &one, &P[0, 0], &k, &D[0, 0], &m, &zero, &dW[0, 0], &k)


cdef void _bias_act_inplace(double[:, ::1] Z, double[::1] b, int act) noexcept nogil:
    cdef Py_ssize_t i, j
    for i in range(Z.shape[0]):
        for j in range(Z.shape[1]):
            Z[i, j] = _act_one(Z[i, j] + b[j], act)


cdef void _bias_act_pair(double[:, ::1] Z, double[::1] b, double[:, ::1] A,
                         int act) noexcept nogil:
    # Z becomes the pre-activation (bias added), A the post-activation
    cdef Py_ssize_t i, j
    cdef double z
    for i in range(Z.shape[0]):
        for j in range(Z.shape[1]):
            z = Z[i, j] + b[j]
            Z[i, j] = z
            A[i, j] = _act_one(z, act)


cdef void _dact_mul_inplace(double[:, ::1] G, double[:, ::1] Z, int act) noexcept nogil:
    # G *= sigma'(Z)
    cdef Py_ssize_t i, j
    for i in range(G.shape[0]):
        for j in range(G.shape[1]):
            G[i, j] *= _dact_one(Z[i, j], act)


cdef void _outer(double[::1] u, double[:, ::1] W_last, double[:, ::1] G) noexcept nogil:
    # G[i, j] = u[i] * W_last[0, j]
    cdef Py_ssize_t i, j
    for i in range(G.shape[0]):
        for j in range(G.shape[1]):
            G[i, j] = u[i] * W_last[0, j]


cdef double[:, ::1] _mat(object a):
    return np.ascontiguousarray(a, dtype=np.float64)


cdef double[::1] _vec(object a):
    return np.ascontiguousarray(a, dtype=np.float64)


def forward(x, weights, biases, int act_id):
    cdef double[:, ::1] a = _mat(x)
    cdef double[:, ::1] w, z
    cdef double[::1] b
    cdef Py_ssize_t B = a.shape[0], i
    cdef int hidden = len(weights) - 1
    cdef object buf
    for l in range(hidden):
        w = _mat(weights[l])
        b = _vec(biases[l])
        buf = np.empty((B, w.shape[0]))
        z = buf
        _abt(a, w, z)
        _bias_act_inplace(z, b, act_id)
        a = z
    w = _mat(weights[hidden])
    out = np.empty((B, 1))
    cdef double[:, ::1] o = out
    _abt(a, w, o)
    cdef double b_last = float(np.asarray(biases[hidden]).ravel()[0])
    for i in range(B):
        o[i, 0] += b_last
    return out[:, 0]


def forward_cache(x, weights, biases, int act_id):
    x = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[:, ::1] a = x
    cdef double[:, ::1] w, zv, av
    cdef double[::1] b
    cdef Py_ssize_t B = a.shape[0], i
    cdef int hidden = len(weights) - 1
    pre, post = [], [x]
    for l in range(hidden):
        w = _mat(weights[l])
        b = _vec(biases[l])
        z_arr = np.empty((B, w.shape[0]))
        a_arr = np.empty((B, w.shape[0]))
        zv, av = z_arr, a_arr
        _abt(a, w, zv)
        _bias_act_pair(zv, b, av, act_id)
        pre.append(z_arr)
        post.append(a_arr)
        a = av
    w = _mat(weights[hidden])
    out = np.empty((B, 1))
    cdef double[:, ::1] o = out
    _abt(a, w, o)
    cdef double b_last = float(np.asarray(biases[hidden]).ravel()[0])
    for i in range(B):
        o[i, 0] += b_last
    return out[:, 0], pre, post


def backprop(weights, int act_id, pre, post, upstream):
    cdef double[::1] u = _vec(upstream)
    cdef Py_ssize_t B = u.shape[0]
    cdef int hidden = len(pre)
    cdef double[:, ::1] w_last = _mat(weights[hidden])
    cdef Py_ssize_t m = w_last.shape[1]
    dws = [None] * (hidden + 1)
    dbs = [None] * (hidden + 1)

    u2 = np.ascontiguousarray(np.asarray(upstream, dtype=np.float64).reshape(B, 1))
    dw = np.empty((1, m))
    cdef double[:, ::1] dwv = dw
    _atb(u2, _mat(post[hidden]), dwv)
    dws[hidden] = dw
    dbs[hidden] = np.array([np.asarray(upstream, dtype=np.float64).sum()])

    g_arr = np.empty((B, m))
    cdef double[:, ::1] g = g_arr
    _outer(u, w_last, g)

    cdef double[:, ::1] zv, pv, dwl, gprev
    cdef int l
    for l in range(hidden - 1, -1, -1):
        zv = _mat(pre[l])
        _dact_mul_inplace(g, zv, act_id)
        pv = _mat(post[l])
        dw_l = np.empty((g.shape[1], pv.shape[1]))
        dwl = dw_l
        _atb(g, pv, dwl)
        dws[l] = dw_l
        dbs[l] = np.asarray(g_arr).sum(axis=0)
        if l > 0:
            w_l = _mat(weights[l])
            gp = np.empty((B, (<object> weights[l]).shape[1]))
            gprev = gp
            _ab(g, w_l, gprev)
            g_arr = gp
            g = gprev
    return dws, dbs
