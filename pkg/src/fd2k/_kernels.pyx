# cython: language_level=3
"""Compiled dense-network kernels.

Mirrors the semantics of ``_kernels_np`` (see its module docstring for the
array conventions) with BLAS dgemm for the matrix products and fused C loops
for bias/activation work, which removes the per-layer Python and temporary
overhead from the training hot path.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport expm1, tanh
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()

cdef enum:
    _LINEAR = 0
    _SIGMOID = 1

OUT_LINEAR = _LINEAR
OUT_SIGMOID = _SIGMOID

name = "compiled"


cdef void _gemm(char ta, char tb, int m, int n, int k, double* a, int lda,
                double* b, int ldb, double* c, int ldc) noexcept nogil:
    cdef double one = 1.0, zero = 0.0
    dgemm(&ta, &tb, &m, &n, &k, &one, a, &lda, b, &ldb, &zero, c, &ldc)


cdef void _matmul(double[:, ::1] x, double[:, ::1] w, double[:, ::1] out) noexcept nogil:
    # row-major out[B,n] = x[B,k] @ w[k,n]
    _gemm(b'N', b'N', <int> w.shape[1], <int> x.shape[0], <int> x.shape[1],
          &w[0, 0], <int> w.shape[1], &x[0, 0], <int> x.shape[1],
          &out[0, 0], <int> out.shape[1])


cdef void _matmul_tn(double[:, ::1] x, double[:, ::1] delta, double[:, ::1] out) noexcept nogil:
    # row-major out[k,n] = x[B,k].T @ delta[B,n]
    _gemm(b'N', b'T', <int> delta.shape[1], <int> x.shape[1], <int> x.shape[0],
          &delta[0, 0], <int> delta.shape[1], &x[0, 0], <int> x.shape[1],
          &out[0, 0], <int> out.shape[1])


cdef void _matmul_nt(double[:, ::1] delta, double[:, ::1] w, double[:, ::1] out) noexcept nogil:
    # row-major out[B,k] = delta[B,n] @ w[k,n].T
    _gemm(b'T', b'N', <int> w.shape[0], <int> delta.shape[0], <int> delta.shape[1],
          &w[0, 0], <int> w.shape[1], &delta[0, 0], <int> delta.shape[1],
          &out[0, 0], <int> out.shape[1])


def mlp_forward(list weights, list biases, int out_act, cnp.ndarray x):
    cdef int L = len(weights)
    cdef list hs = []
    cdef double[:, ::1] h = x
    cdef double[:, ::1] z
    cdef double[::1] b
    cdef double[:, ::1] w
    cdef cnp.ndarray zarr
    cdef Py_ssize_t i, j, rows, cols
    cdef int l
    cdef double zv
    for l in range(L):
        w = weights[l]
        b = biases[l]
        zarr = np.empty((h.shape[0], w.shape[1]), dtype=np.float64)
        z = zarr
        rows = z.shape[0]
        cols = z.shape[1]
        with nogil:
            _matmul(h, w, z)
            if l < L - 1:
                for i in range(rows):
                    for j in range(cols):
                        zv = z[i, j] + b[j]
                        z[i, j] = zv if zv > 0.0 else expm1(zv)
            elif out_act == _SIGMOID:
                for i in range(rows):
                    for j in range(cols):
                        z[i, j] = 0.5 * (tanh(0.5 * (z[i, j] + b[j])) + 1.0)
            else:
                for i in range(rows):
                    for j in range(cols):
                        z[i, j] = z[i, j] + b[j]
        hs.append(zarr)
        h = z
    return hs[L - 1], hs


def mlp_backward(list weights, list biases, int out_act, cnp.ndarray x,
                 list hs, cnp.ndarray g_out, list gws=None, list gbs=None):
    cdef int L = len(weights)
    cdef double[:, ::1] y = hs[L - 1]
    cdef double[:, ::1] g = g_out
    cdef Py_ssize_t batch = y.shape[0]
    cdef cnp.ndarray delta_arr = np.empty((batch, y.shape[1]), dtype=np.float64)
    cdef double[:, ::1] delta = delta_arr
    cdef double[:, ::1] inp, w, gw, g_in, h_prev
    cdef double[::1] gb
    cdef cnp.ndarray g_in_arr
    cdef Py_ssize_t i, j, cols
    cdef int l
    cdef double s, hv

    cols = y.shape[1]
    with nogil:
        if out_act == _SIGMOID:
            for i in range(batch):
                for j in range(cols):
                    delta[i, j] = g[i, j] * y[i, j] * (1.0 - y[i, j])
        else:
            for i in range(batch):
                for j in range(cols):
                    delta[i, j] = g[i, j]

    for l in range(L - 1, -1, -1):
        inp = x if l == 0 else hs[l - 1]
        w = weights[l]
        g_in_arr = np.empty((batch, w.shape[0]), dtype=np.float64)
        g_in = g_in_arr
        if gws is not None:
            gw = gws[l]
            gb = gbs[l]
            cols = delta.shape[1]
            with nogil:
                _matmul_tn(inp, delta, gw)
                for j in range(cols):
                    s = 0.0
                    for i in range(batch):
                        s += delta[i, j]
                    gb[j] = s
        with nogil:
            _matmul_nt(delta, w, g_in)
        if l > 0:
            h_prev = hs[l - 1]
            cols = g_in.shape[1]
            with nogil:
                # reuse g_in as the next delta: g_in *= elu'(h_prev)
                for i in range(batch):
                    for j in range(cols):
                        hv = h_prev[i, j]
                        g_in[i, j] = g_in[i, j] * (1.0 if hv > 0.0 else hv + 1.0)
            delta_arr = g_in_arr
            delta = delta_arr
    return g_in_arr
