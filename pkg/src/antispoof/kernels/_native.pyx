# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled direct-loop kernels for conv / maxpool / LRN.

All parallel loops assign each output (or batch) slice to exactly one
thread, so accumulation order is fixed and results are deterministic.
"""

import numpy as np

cimport cython
from cython.parallel cimport prange

ctypedef fused real_t:
    float
    double


def conv2d_forward(real_t[:, :, :, ::1] xp, real_t[:, :, :, ::1] w, real_t[::1] b,
                   int stride, real_t[:, :, :, ::1] out):
    """xp is already zero-padded; out is preallocated (N,K,Ho,Wo)."""
    cdef Py_ssize_t n_b = xp.shape[0], c_in = xp.shape[1]
    cdef Py_ssize_t k_out = w.shape[0], kh = w.shape[2], kw = w.shape[3]
    cdef Py_ssize_t ho = out.shape[2], wo = out.shape[3]
    cdef Py_ssize_t n, k, c, i, j, oy, ox
    cdef real_t wv
    with nogil:
        for n in prange(n_b, schedule='static'):
            for k in range(k_out):
                for oy in range(ho):
                    for ox in range(wo):
                        out[n, k, oy, ox] = b[k]
                for c in range(c_in):
                    for i in range(kh):
                        for j in range(kw):
                            wv = w[k, c, i, j]
                            for oy in range(ho):
                                for ox in range(wo):
                                    out[n, k, oy, ox] = out[n, k, oy, ox] + wv * xp[n, c, oy * stride + i, ox * stride + j]


def conv2d_backward_input(real_t[:, :, :, ::1] gy, real_t[:, :, :, ::1] w,
                          int stride, real_t[:, :, :, ::1] gxp):
    """Accumulates into preallocated zeroed padded-input gradient."""
    cdef Py_ssize_t n_b = gy.shape[0], k_out = gy.shape[1]
    cdef Py_ssize_t ho = gy.shape[2], wo = gy.shape[3]
    cdef Py_ssize_t c_in = w.shape[1], kh = w.shape[2], kw = w.shape[3]
    cdef Py_ssize_t n, k, c, i, j, oy, ox
    cdef real_t wv
    with nogil:
        for n in prange(n_b, schedule='static'):
            for c in range(c_in):
                for k in range(k_out):
                    for i in range(kh):
                        for j in range(kw):
                            wv = w[k, c, i, j]
                            for oy in range(ho):
                                for ox in range(wo):
                                    gxp[n, c, oy * stride + i, ox * stride + j] = (
                                        gxp[n, c, oy * stride + i, ox * stride + j] + wv * gy[n, k, oy, ox])


def conv2d_backward_params(real_t[:, :, :, ::1] gy, real_t[:, :, :, ::1] xp,
                           int stride, real_t[:, :, :, ::1] gw, real_t[::1] gb):
    cdef Py_ssize_t n_b = gy.shape[0], k_out = gy.shape[1]
    cdef Py_ssize_t ho = gy.shape[2], wo = gy.shape[3]
    cdef Py_ssize_t c_in = xp.shape[1], kh = gw.shape[2], kw = gw.shape[3]
    cdef Py_ssize_t n, k, c, i, j, oy, ox
    cdef real_t acc
    with nogil:
        for k in prange(k_out, schedule='static'):
            acc = 0
            for n in range(n_b):
                for oy in range(ho):
                    for ox in range(wo):
                        acc = acc + gy[n, k, oy, ox]
            gb[k] = acc
            for c in range(c_in):
                for i in range(kh):
                    for j in range(kw):
                        acc = 0
                        for n in range(n_b):
                            for oy in range(ho):
                                for ox in range(wo):
                                    acc = acc + gy[n, k, oy, ox] * xp[n, c, oy * stride + i, ox * stride + j]
                        gw[k, c, i, j] = acc


def maxpool_forward(real_t[:, :, :, ::1] x, int window, int stride,
                    real_t[:, :, :, ::1] out, long long[:, :, :, ::1] argmax):
    cdef Py_ssize_t n_b = x.shape[0], c_in = x.shape[1]
    cdef Py_ssize_t w_img = x.shape[3]
    cdef Py_ssize_t ho = out.shape[2], wo = out.shape[3]
    cdef Py_ssize_t n, c, oy, ox, i, j, y, xx
    cdef real_t best, v
    cdef long long best_idx
    with nogil:
        for n in prange(n_b, schedule='static'):
            for c in range(c_in):
                for oy in range(ho):
                    for ox in range(wo):
                        best = x[n, c, oy * stride, ox * stride]
                        best_idx = (oy * stride) * w_img + ox * stride
                        for i in range(window):
                            for j in range(window):
                                y = oy * stride + i
                                xx = ox * stride + j
                                v = x[n, c, y, xx]
                                if v > best:
                                    best = v
                                    best_idx = y * w_img + xx
                        out[n, c, oy, ox] = best
                        argmax[n, c, oy, ox] = best_idx


def maxpool_backward(real_t[:, :, :, ::1] gy, long long[:, :, :, ::1] argmax,
                     real_t[:, :, :, ::1] gx):
    cdef Py_ssize_t n_b = gy.shape[0], c_in = gy.shape[1]
    cdef Py_ssize_t ho = gy.shape[2], wo = gy.shape[3]
    cdef Py_ssize_t w_img = gx.shape[3]
    cdef Py_ssize_t n, c, oy, ox
    cdef long long idx
    with nogil:
        for n in prange(n_b, schedule='static'):
            for c in range(c_in):
                for oy in range(ho):
                    for ox in range(wo):
                        idx = argmax[n, c, oy, ox]
                        gx[n, c, idx // w_img, idx % w_img] = gx[n, c, idx // w_img, idx % w_img] + gy[n, c, oy, ox]


def lrn_forward(real_t[:, :, :, ::1] x, int depth, double k, double alpha, double beta,
                real_t[:, :, :, ::1] out):
    cdef Py_ssize_t n_b = x.shape[0], c_in = x.shape[1]
    cdef Py_ssize_t h = x.shape[2], w_img = x.shape[3]
    cdef Py_ssize_t n, c, y, xx, lo, hi, cc
    cdef int half = (depth - 1) // 2
    cdef double s
    with nogil:
        for n in prange(n_b, schedule='static'):
            for c in range(c_in):
                lo = c - half if c - half > 0 else 0
                hi = c + half if c + half < c_in - 1 else c_in - 1
                for y in range(h):
                    for xx in range(w_img):
                        s = 0
                        for cc in range(lo, hi + 1):
                            s = s + (<double> x[n, cc, y, xx]) * (<double> x[n, cc, y, xx])
                        out[n, c, y, xx] = <real_t> (x[n, c, y, xx] / ((k + alpha * s) ** beta))


def lrn_backward(real_t[:, :, :, ::1] gy, real_t[:, :, :, ::1] x,
                 int depth, double k, double alpha, double beta,
                 real_t[:, :, :, ::1] gx):
    cdef Py_ssize_t n_b = x.shape[0], c_in = x.shape[1]
    cdef Py_ssize_t h = x.shape[2], w_img = x.shape[3]
    cdef Py_ssize_t n, c, y, xx, lo, hi, cc
    cdef int half = (depth - 1) // 2
    cdef double s, inner
    with nogil:
        for n in prange(n_b, schedule='static'):
            for c in range(c_in):
                lo = c - half if c - half > 0 else 0
                hi = c + half if c + half < c_in - 1 else c_in - 1
                for y in range(h):
                    for xx in range(w_img):
                        # gy_c * scale^-beta - 2 a b x_c * sum_{cc in win} gy_cc x_cc scale_cc^-(b+1)
                        inner = 0
                        for cc in range(lo, hi + 1):
                            inner = inner + (<double> gy[n, cc, y, xx]) * (<double> x[n, cc, y, xx]) * _scale(x, n, cc, y, xx, half, c_in, k, alpha) ** (-beta - 1.0)
                        gx[n, c, y, xx] = <real_t> (
                            (<double> gy[n, c, y, xx]) * _scale(x, n, c, y, xx, half, c_in, k, alpha) ** (-beta)
                            - 2.0 * alpha * beta * (<double> x[n, c, y, xx]) * inner)


cdef inline double _scale(real_t[:, :, :, ::1] x, Py_ssize_t n, Py_ssize_t c,
                          Py_ssize_t y, Py_ssize_t xx, int half, Py_ssize_t c_in,
                          double k, double alpha) nogil:
    cdef Py_ssize_t lo = c - half if c - half > 0 else 0
    cdef Py_ssize_t hi = c + half if c + half < c_in - 1 else c_in - 1
    cdef Py_ssize_t cc
    cdef double s = 0
    for cc in range(lo, hi + 1):
        s = s + (<double> x[n, cc, y, xx]) * (<double> x[n, cc, y, xx])
    return k + alpha * s
