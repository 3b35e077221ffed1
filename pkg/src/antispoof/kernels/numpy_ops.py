"""Vectorized NumPy implementations of the hot layer kernels.

Convolution goes through an im2col buffer so the contraction runs as one
BLAS matmul; col2im walks the kernel window with strided slice-adds, which
keeps the scatter deterministic and avoids np.add.at.
"""

import numpy as np

from ..errors import ShapeError


def _check_conv_shapes(x, w, stride, pad):
    if x.ndim != 4 or w.ndim != 4:
        raise ShapeError(f"conv2d expects 4-D input/weights, got {x.shape} / {w.shape}")
    if x.shape[1] != w.shape[1]:
        raise ShapeError(f"input channels {x.shape[1]} != weight channels {w.shape[1]}")
    if stride < 1 or pad < 0:
        raise ShapeError(f"invalid stride={stride} pad={pad}")
    _, _, h, wd = x.shape
    _, _, kh, kw = w.shape
    ho = (h + 2 * pad - kh) // stride + 1
    wo = (wd + 2 * pad - kw) // stride + 1
    if h + 2 * pad < kh or wd + 2 * pad < kw or ho < 1 or wo < 1:
        raise ShapeError(f"kernel {kh}x{kw} does not fit padded input {h + 2 * pad}x{wd + 2 * pad}")
    return ho, wo


def _pad(x, pad):
    if pad == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))


def _im2col(xp, kh, kw, stride, ho, wo):
    n, c = xp.shape[:2]
    cols = np.empty((n, c, kh, kw, ho, wo), dtype=xp.dtype)
    for i in range(kh):
        for j in range(kw):
            cols[:, :, i, j] = xp[:, :, i:i + stride * ho:stride, j:j + stride * wo:stride]
    return cols


def conv2d_forward(x, w, b, stride, pad):
    x, w, b = np.asarray(x), np.asarray(w), np.asarray(b)
    ho, wo = _check_conv_shapes(x, w, stride, pad)
    n = x.shape[0]
    k, _, kh, kw = w.shape
    cols = _im2col(_pad(x, pad), kh, kw, stride, ho, wo)
    cols2 = cols.reshape(n, -1, ho * wo)
    y = np.matmul(w.reshape(k, -1), cols2)  # (n, k, ho*wo)
    y += b.reshape(1, k, 1)
    return y.reshape(n, k, ho, wo)


def conv2d_backward(grad_out, x, w, stride, pad):
    x, w, grad_out = np.asarray(x), np.asarray(w), np.asarray(grad_out)
    ho, wo = _check_conv_shapes(x, w, stride, pad)
    n, c, h, wd = x.shape
    k, _, kh, kw = w.shape
    if grad_out.shape != (n, k, ho, wo):
        raise ShapeError(f"grad_out shape {grad_out.shape} != forward output {(n, k, ho, wo)}")

    gy2 = grad_out.reshape(n, k, ho * wo)
    cols2 = _im2col(_pad(x, pad), kh, kw, stride, ho, wo).reshape(n, -1, ho * wo)

    grad_w = np.matmul(gy2, cols2.transpose(0, 2, 1)).sum(axis=0).reshape(w.shape)
    grad_b = grad_out.sum(axis=(0, 2, 3))

    gcols = np.matmul(w.reshape(k, -1).T, gy2).reshape(n, c, kh, kw, ho, wo)
    gxp = np.zeros((n, c, h + 2 * pad, wd + 2 * pad), dtype=gcols.dtype)
    for i in range(kh):
        for j in range(kw):
            gxp[:, :, i:i + stride * ho:stride, j:j + stride * wo:stride] += gcols[:, :, i, j]
    grad_x = gxp[:, :, pad:pad + h, pad:pad + wd] if pad else gxp
    return np.ascontiguousarray(grad_x), grad_w, grad_b


def maxpool_forward(x, window, stride):
    x = np.asarray(x)
    if x.ndim != 4:
        raise ShapeError(f"maxpool expects 4-D input, got {x.shape}")
    n, c, h, wd = x.shape
    if window > h or window > wd:
        raise ShapeError(f"pool window {window} exceeds spatial extent {h}x{wd}")
    ho = (h - window) // stride + 1
    wo = (wd - window) // stride + 1
    cols = np.empty((n, c, window * window, ho, wo), dtype=x.dtype)
    for i in range(window):
        for j in range(window):
            cols[:, :, i * window + j] = x[:, :, i:i + stride * ho:stride, j:j + stride * wo:stride]
    local = cols.argmax(axis=2)  # row-major within window: first occurrence wins ties
    out = np.take_along_axis(cols, local[:, :, None], axis=2)[:, :, 0]
    row = (np.arange(ho) * stride).reshape(1, 1, ho, 1)
    col = (np.arange(wo) * stride).reshape(1, 1, 1, wo)
    argmax = (row + local // window) * wd + (col + local % window)
    return out, argmax


def maxpool_backward(grad_out, argmax, h, w):
    grad_out = np.asarray(grad_out)
    n, c = grad_out.shape[:2]
    gx = np.zeros((n, c, h * w), dtype=grad_out.dtype)
    flat = argmax.reshape(n, c, -1)
    g = grad_out.reshape(n, c, -1)
    np.add.at(gx, (np.arange(n)[:, None, None], np.arange(c)[None, :, None], flat), g)
    return gx.reshape(n, c, h, w)


def _lrn_window_sums(sq, depth):
    """Cross-channel box sums of squared activations, window clipped at edges."""
    c = sq.shape[1]
    half = (depth - 1) // 2
    csum = np.concatenate([np.zeros_like(sq[:, :1]), np.cumsum(sq, axis=1)], axis=1)
    lo = np.maximum(np.arange(c) - half, 0)
    hi = np.minimum(np.arange(c) + half, c - 1)
    return csum[:, hi + 1] - csum[:, lo]


def lrn_forward(x, depth, k, alpha, beta):
    x = np.asarray(x)
    if x.ndim != 4:
        raise ShapeError(f"lrn expects 4-D input, got {x.shape}")
    denom = (k + alpha * _lrn_window_sums(x * x, depth)) ** beta
    return x / denom


def lrn_backward(grad_out, x, depth, k, alpha, beta):
    x, grad_out = np.asarray(x), np.asarray(grad_out)
    scale = k + alpha * _lrn_window_sums(x * x, depth)
    # d b_c / d a_d = delta * scale^-beta - 2 alpha beta a_c a_d scale_c^-(beta+1)
    # for |c - d| within the window; the window membership is symmetric.
    inner = grad_out * x * scale ** (-beta - 1.0)
    spread = _lrn_window_sums(inner, depth)
    return grad_out * scale ** (-beta) - 2.0 * alpha * beta * x * spread


def fc_forward(x, w, b):
    x, w, b = np.asarray(x), np.asarray(w), np.asarray(b)
    if x.ndim == 1:
        return fc_forward(x[None], w, b)[0]
    if x.ndim != 2 or w.ndim != 2 or x.shape[1] != w.shape[1]:
        raise ShapeError(f"fc shapes incompatible: x {x.shape}, w {w.shape}")
    return x @ w.T + b


def fc_backward(grad_out, x, w):
    grad_out, x, w = np.asarray(grad_out), np.asarray(x), np.asarray(w)
    if grad_out.shape != (x.shape[0], w.shape[0]):
        raise ShapeError(f"fc grad shape {grad_out.shape} != {(x.shape[0], w.shape[0])}")
    return grad_out @ w, grad_out.T @ x, grad_out.sum(axis=0)
