# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel core.

Same interface and shape conventions as kernels/pure.py.  The convolution is
im2col built with C loops feeding the platform BLAS GEMM (float32 uses sgemm,
float64 dgemm), which keeps the arithmetic comparable to the numpy fallback
while avoiding its intermediate transpose copies and Python dispatch.
"""

import numpy as np

from scipy.linalg.cython_blas cimport dgemm, sgemm

ctypedef fused real:
    float
    double


cdef void _gemm_nn(real* a, real* b, real* c, int m, int n, int k, real beta) noexcept nogil:
    # Row-major C(m,n) = A(m,k) @ B(k,n) + beta*C, via the column-major swap.
    cdef char t = c'N'
    cdef real alpha = 1.0
    if real is float:
        sgemm(&t, &t, &n, &m, &k, &alpha, b, &n, a, &k, &beta, c, &n)
    else:
        dgemm(&t, &t, &n, &m, &k, &alpha, b, &n, a, &k, &beta, c, &n)


cdef void _fill_windows(real[:, :, ::1] x, real[:, ::1] win,
                        Py_ssize_t width) noexcept nogil:
    cdef Py_ssize_t nb = x.shape[0], length = x.shape[1], dim = x.shape[2]
    cdef Py_ssize_t p_count = length - width + 1
    cdef Py_ssize_t b, p, j, c, row
    for b in range(nb):
        for p in range(p_count):
            row = b * p_count + p
            for j in range(width):
                for c in range(dim):
                    win[row, j * dim + c] = x[b, p + j, c]


def conv1d_forward(real[:, :, ::1] x, real[:, :, ::1] w, real[::1] bias):
    cdef Py_ssize_t nb = x.shape[0], length = x.shape[1], dim = x.shape[2]
    cdef Py_ssize_t nf = w.shape[0], width = w.shape[1]
    cdef Py_ssize_t p_count = length - width + 1
    cdef Py_ssize_t kd = width * dim

    dtype = np.float32 if real is float else np.float64
    win_arr = np.empty((nb * p_count, kd), dtype=dtype)
    wt_arr = np.empty((kd, nf), dtype=dtype)
    out_arr = np.empty((nb, p_count, nf), dtype=dtype)
    cdef real[:, ::1] win = win_arr
    cdef real[:, ::1] wt = wt_arr
    cdef real[:, :, ::1] out = out_arr
    cdef Py_ssize_t f, j, c, row
    with nogil:
        _fill_windows(x, win, width)
        for f in range(nf):
            for j in range(width):
                for c in range(dim):
                    wt[j * dim + c, f] = w[f, j, c]
        _gemm_nn(&win[0, 0], &wt[0, 0], &out[0, 0, 0],
                 <int>(nb * p_count), <int>nf, <int>kd, <real>0.0)
        for row in range(nb * p_count):
            for f in range(nf):
                out[row // p_count, row % p_count, f] += bias[f]
    return out_arr


def conv1d_backward(real[:, :, ::1] x, real[:, :, ::1] w, real[:, :, ::1] d_out):
    cdef Py_ssize_t nb = x.shape[0], length = x.shape[1], dim = x.shape[2]
    cdef Py_ssize_t nf = w.shape[0], width = w.shape[1]
    cdef Py_ssize_t p_count = length - width + 1
    cdef Py_ssize_t kd = width * dim
    cdef Py_ssize_t rows = nb * p_count

    dtype = np.float32 if real is float else np.float64
    win_arr = np.empty((rows, kd), dtype=dtype)
    gt_arr = np.empty((nf, rows), dtype=dtype)
    d_win_arr = np.empty((rows, kd), dtype=dtype)
    d_x_arr = np.zeros((nb, length, dim), dtype=dtype)
    d_w_arr = np.empty((nf, width, dim), dtype=dtype)
    d_b_arr = np.zeros(nf, dtype=dtype)
    cdef real[:, ::1] win = win_arr
    cdef real[:, ::1] gt = gt_arr
    cdef real[:, ::1] d_win = d_win_arr
    cdef real[:, :, ::1] d_x = d_x_arr
    cdef real[:, :, ::1] d_w = d_w_arr
    cdef real[::1] d_b = d_b_arr
    cdef Py_ssize_t b, p, j, c, f, row
    with nogil:
        _fill_windows(x, win, width)
        for b in range(nb):
            for p in range(p_count):
                row = b * p_count + p
                for f in range(nf):
                    gt[f, row] = d_out[b, p, f]
                    d_b[f] += d_out[b, p, f]
        # d_w (F, width*D) = g^T (F, rows) @ win (rows, width*D)
        _gemm_nn(&gt[0, 0], &win[0, 0], &d_w[0, 0, 0],
                 <int>nf, <int>kd, <int>rows, <real>0.0)
        # d_win (rows, width*D) = g (rows, F) @ w (F, width*D)
        _gemm_nn(&d_out[0, 0, 0], &w[0, 0, 0], &d_win[0, 0],
                 <int>rows, <int>kd, <int>nf, <real>0.0)
        for b in range(nb):
            for p in range(p_count):
                row = b * p_count + p
                for j in range(width):
                    for c in range(dim):
                        d_x[b, p + j, c] += d_win[row, j * dim + c]
    return d_x_arr, d_w_arr, d_b_arr


def maxpool_forward(real[:, :, ::1] a):
    cdef Py_ssize_t nb = a.shape[0], p_count = a.shape[1], nf = a.shape[2]
    dtype = np.float32 if real is float else np.float64
    pooled_arr = np.empty((nb, nf), dtype=dtype)
    arg_arr = np.empty((nb, nf), dtype=np.intp)
    cdef real[:, ::1] pooled = pooled_arr
    cdef Py_ssize_t[:, ::1] arg = arg_arr
    cdef Py_ssize_t b, p, f, best_p
    cdef real best
    with nogil:
        for b in range(nb):
            for f in range(nf):
                best = a[b, 0, f]
                best_p = 0
                for p in range(1, p_count):
                    if a[b, p, f] > best:   # strict: first maximum wins ties
                        best = a[b, p, f]
                        best_p = p
                pooled[b, f] = best
                arg[b, f] = best_p
    return pooled_arr, arg_arr


def maxpool_backward(real[:, ::1] d_pooled, Py_ssize_t[:, ::1] arg, Py_ssize_t positions):
    cdef Py_ssize_t nb = d_pooled.shape[0], nf = d_pooled.shape[1]
    dtype = np.float32 if real is float else np.float64
    d_a_arr = np.zeros((nb, positions, nf), dtype=dtype)
    cdef real[:, :, ::1] d_a = d_a_arr
    cdef Py_ssize_t b, f
    with nogil:
        for b in range(nb):
            for f in range(nf):
                d_a[b, arg[b, f], f] = d_pooled[b, f]
    return d_a_arr
