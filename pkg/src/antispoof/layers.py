"""Layer specifications and per-layer forward/backward passes.

The eight layer kinds cover the whole network: five conv layers with
response normalization and max pooling after the early ones, three
fully-connected layers with dropout, ReLU everywhere, softmax output.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigError, ShapeError


@dataclass(frozen=True)
class Conv:
    out_channels: int
    kernel: tuple[int, int]
    stride: int = 1
    pad: int = 0
    kind: str = field(default="Conv", init=False)

    def __post_init__(self):
        if self.out_channels < 1 or min(self.kernel) < 1 or self.stride < 1 or self.pad < 0:
            raise ConfigError(f"invalid conv params: {self}")


@dataclass(frozen=True)
class ReLU:
    kind: str = field(default="ReLU", init=False)


@dataclass(frozen=True)
class LRN:
    depth: int = 5
    k: float = 2.0
    alpha: float = 1e-4
    beta: float = 0.75
    kind: str = field(default="LRN", init=False)

    def __post_init__(self):
        if self.depth < 1 or self.depth % 2 == 0 or self.k <= 0:
            raise ConfigError(f"LRN depth must be odd >= 1 and k > 0: {self}")


@dataclass(frozen=True)
class MaxPool:
    window: int
    stride: int
    kind: str = field(default="MaxPool", init=False)

    def __post_init__(self):
        if self.window < 1 or self.stride < 1:
            raise ConfigError(f"invalid pool params: {self}")


@dataclass(frozen=True)
class FullyConnected:
    out_dim: int
    kind: str = field(default="FullyConnected", init=False)

    def __post_init__(self):
        if self.out_dim < 1:
            raise ConfigError(f"invalid FC width: {self}")


@dataclass(frozen=True)
class Dropout:
    rate: float = 0.5
    kind: str = field(default="Dropout", init=False)

    def __post_init__(self):
        if not 0.0 <= self.rate < 1.0:
            raise ConfigError(f"dropout rate must be in [0, 1): {self.rate}")


@dataclass(frozen=True)
class Softmax:
    kind: str = field(default="Softmax", init=False)


LAYER_KINDS = {
    "Conv": Conv, "ReLU": ReLU, "LRN": LRN, "MaxPool": MaxPool,
    "FullyConnected": FullyConnected, "Dropout": Dropout, "Softmax": Softmax,
}


def layer_to_dict(layer):
    d = {k: v for k, v in layer.__dict__.items()}
    if isinstance(layer, Conv):
        d["kernel"] = list(layer.kernel)
    return d


def layer_from_dict(d):
    d = dict(d)
    kind = d.pop("kind")
    if kind not in LAYER_KINDS:
        raise ConfigError(f"unknown layer kind {kind!r}")
    if kind == "Conv":
        d["kernel"] = tuple(d["kernel"])
    return LAYER_KINDS[kind](**d)


def output_shape(layer, in_shape):
    """Shape a layer produces for a (C, H, W) or flat (D,) input."""
    if isinstance(layer, Conv):
        if len(in_shape) != 3:
            raise ShapeError(f"conv needs (C,H,W) input, got {in_shape}")
        c, h, w = in_shape
        kh, kw = layer.kernel
        ho = (h + 2 * layer.pad - kh) // layer.stride + 1
        wo = (w + 2 * layer.pad - kw) // layer.stride + 1
        if ho < 1 or wo < 1:
            raise ShapeError(f"conv kernel {layer.kernel} does not fit input {in_shape}")
        return (layer.out_channels, ho, wo)
    if isinstance(layer, MaxPool):
        if len(in_shape) != 3:
            raise ShapeError(f"maxpool needs (C,H,W) input, got {in_shape}")
        c, h, w = in_shape
        if layer.window > h or layer.window > w:
            raise ShapeError(f"pool window {layer.window} exceeds input {in_shape}")
        return (c, (h - layer.window) // layer.stride + 1, (w - layer.window) // layer.stride + 1)
    if isinstance(layer, FullyConnected):
        return (layer.out_dim,)
    # ReLU / LRN / Dropout / Softmax preserve shape
    return tuple(in_shape)


# ---------------------------------------------------------------------------
# stateless activations and regularizers
# ---------------------------------------------------------------------------

def relu(x):
    return np.maximum(x, 0)


def relu_backward(grad_out, x):
    """Gradient flows only where the input was strictly positive."""
    return grad_out * (x > 0)


def dropout_mask(shape, drop_rate, rng, mode="train"):
    """Inverted-dropout mask: {0, 1/(1-p)} in train mode, ones in eval."""
    if not 0.0 <= drop_rate < 1.0:
        raise ConfigError(f"drop_rate must be in [0, 1): {drop_rate}")
    if mode == "eval" or drop_rate == 0.0:
        return np.ones(shape, dtype=np.float32)
    keep = 1.0 - drop_rate
    return (rng.random(shape) < keep).astype(np.float32) / np.float32(keep)


def softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits, labels):
    """Mean NLL over the batch and its gradient w.r.t. the logits.

    labels: integer class indices (N,) or one-hot (N, K).
    """
    logits = np.asarray(logits)
    n = logits.shape[0]
    labels = np.asarray(labels)
    if labels.ndim == 2:
        labels = labels.argmax(axis=1)
    z = logits - logits.max(axis=1, keepdims=True)
    log_probs = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    loss = float(-log_probs[np.arange(n), labels].mean())
    grad = np.exp(log_probs)
    grad[np.arange(n), labels] -= 1.0
    return loss, (grad / n).astype(logits.dtype)


# ---------------------------------------------------------------------------
# layer dispatch used by the network
# ---------------------------------------------------------------------------

def layer_forward(layer, x, params=None, mode="eval", rng=None, mask=None):
    """Run one layer; returns (output, cache) where cache feeds backward."""
    if isinstance(layer, Conv):
        y = kernels.conv2d_forward(x, params["w"], params["b"], layer.stride, layer.pad)
        return y, {"x": x}
    if isinstance(layer, ReLU):
        return relu(x), {"x": x}
    if isinstance(layer, LRN):
        y = kernels.lrn_forward(x, layer.depth, layer.k, layer.alpha, layer.beta)
        return y, {"x": x}
    if isinstance(layer, MaxPool):
        y, argmax = kernels.maxpool_forward(x, layer.window, layer.stride)
        return y, {"argmax": argmax, "h": x.shape[2], "w": x.shape[3]}
    if isinstance(layer, FullyConnected):
        flat = x.reshape(x.shape[0], -1)
        if flat.shape[1] != params["w"].shape[1]:
            raise ShapeError(f"FC input dim {flat.shape[1]} != weight dim {params['w'].shape[1]}")
        return kernels.fc_forward(flat, params["w"], params["b"]), {"x_shape": x.shape, "flat": flat}
    if isinstance(layer, Dropout):
        if mask is None:
            mask = dropout_mask(x.shape, layer.rate, rng, mode)
        return x * mask.astype(x.dtype), {"mask": mask}
    if isinstance(layer, Softmax):
        return softmax(x), {}
    raise ConfigError(f"unknown layer {layer!r}")


def layer_backward(layer, grad_out, cache, params=None):
    """Returns (grad_input, grad_params or None)."""
    if isinstance(layer, Conv):
        gx, gw, gb = kernels.conv2d_backward(grad_out, cache["x"], params["w"], layer.stride, layer.pad)
        return gx, {"w": gw, "b": gb}
    if isinstance(layer, ReLU):
        return relu_backward(grad_out, cache["x"]), None
    if isinstance(layer, LRN):
        return kernels.lrn_backward(grad_out, cache["x"], layer.depth, layer.k, layer.alpha, layer.beta), None
    if isinstance(layer, MaxPool):
        return kernels.maxpool_backward(grad_out, cache["argmax"], cache["h"], cache["w"]), None
    if isinstance(layer, FullyConnected):
        gx, gw, gb = kernels.fc_backward(grad_out, cache["flat"], params["w"])
        return gx.reshape(cache["x_shape"]), {"w": gw, "b": gb}
    if isinstance(layer, Dropout):
        return grad_out * cache["mask"].astype(grad_out.dtype), None
    raise ConfigError(f"no backward for layer {layer!r}")


def has_params(layer):
    return isinstance(layer, (Conv, FullyConnected))
