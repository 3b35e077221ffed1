"""Thin wrapper over the compiled kernels: shape checks, padding, allocation.

Mirrors the numpy_ops API exactly so callers can switch backends freely.
"""

import numpy as np

from ..errors import ShapeError
from . import _native
from .numpy_ops import _check_conv_shapes


def _as_real(a):
    a = np.ascontiguousarray(a)
    if a.dtype not in (np.float32, np.float64):
        a = a.astype(np.float64)
    return a


def _common(*arrays):
    dtype = np.result_type(*[a.dtype for a in arrays])
    dtype = np.float32 if dtype == np.float32 else np.float64
    return [np.ascontiguousarray(a, dtype=dtype) for a in arrays]


def _pad(x, pad):
    if pad == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))


def conv2d_forward(x, w, b, stride, pad):
    x, w, b = (_as_real(a) for a in (x, w, b))
    ho, wo = _check_conv_shapes(x, w, stride, pad)
    x, w, b = _common(x, w, b)
    out = np.empty((x.shape[0], w.shape[0], ho, wo), dtype=x.dtype)
    _native.conv2d_forward(_pad(x, pad), w, b, stride, out)
    return out


def conv2d_backward(grad_out, x, w, stride, pad):
    x, w, grad_out = (_as_real(a) for a in (x, w, grad_out))
    ho, wo = _check_conv_shapes(x, w, stride, pad)
    n, c, h, wd = x.shape
    if grad_out.shape != (n, w.shape[0], ho, wo):
        raise ShapeError(f"grad_out shape {grad_out.shape} != forward output {(n, w.shape[0], ho, wo)}")
    grad_out, x, w = _common(grad_out, x, w)
    xp = _pad(x, pad)
    gxp = np.zeros_like(xp)
    gw = np.empty_like(w)
    gb = np.empty(w.shape[0], dtype=w.dtype)
    _native.conv2d_backward_input(grad_out, w, stride, gxp)
    _native.conv2d_backward_params(grad_out, xp, stride, gw, gb)
    gx = gxp[:, :, pad:pad + h, pad:pad + wd] if pad else gxp
    return np.ascontiguousarray(gx), gw, gb


def maxpool_forward(x, window, stride):
    x = _as_real(x)
    if x.ndim != 4:
        raise ShapeError(f"maxpool expects 4-D input, got {x.shape}")
    n, c, h, wd = x.shape
    if window > h or window > wd:
        raise ShapeError(f"pool window {window} exceeds spatial extent {h}x{wd}")
    ho = (h - window) // stride + 1
    wo = (wd - window) // stride + 1
    out = np.empty((n, c, ho, wo), dtype=x.dtype)
    argmax = np.empty((n, c, ho, wo), dtype=np.int64)
    _native.maxpool_forward(x, window, stride, out, argmax)
    return out, argmax


def maxpool_backward(grad_out, argmax, h, w):
    grad_out = _as_real(grad_out)
    argmax = np.ascontiguousarray(argmax, dtype=np.int64)
    n, c = grad_out.shape[:2]
    gx = np.zeros((n, c, h, w), dtype=grad_out.dtype)
    _native.maxpool_backward(grad_out, argmax, gx)
    return gx


def lrn_forward(x, depth, k, alpha, beta):
    x = _as_real(x)
    if x.ndim != 4:
        raise ShapeError(f"lrn expects 4-D input, got {x.shape}")
    out = np.empty_like(x)
    _native.lrn_forward(x, depth, float(k), float(alpha), float(beta), out)
    return out


def lrn_backward(grad_out, x, depth, k, alpha, beta):
    grad_out, x = _common(_as_real(grad_out), _as_real(x))
    gx = np.empty_like(x)
    _native.lrn_backward(grad_out, x, depth, float(k), float(alpha), float(beta), gx)
    return gx


# FC layers are a single BLAS call either way; reuse the numpy path.
from .numpy_ops import fc_backward, fc_forward  # noqa: E402,F401
