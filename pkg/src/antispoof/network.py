"""Network specification, parameter initialization, and full passes.

The default stack scales the classic five-conv / three-FC design down to a
128x128 input: response normalization and pooling after conv1/conv2, a
final pool after conv5, ReLU after every conv and FC layer, dropout after
the first two FC layers, and a two-way softmax output. Features for the
downstream classifier are taken at the last hidden FC layer.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ShapeError
from .layers import (
    LRN,
    Conv,
    Dropout,
    FullyConnected,
    MaxPool,
    ReLU,
    Softmax,
    has_params,
    layer_backward,
    layer_forward,
    layer_from_dict,
    layer_to_dict,
    output_shape,
)


@dataclass
class NetworkSpec:
    input_shape: tuple[int, int, int]
    layers: list
    feature_index: int

    def __post_init__(self):
        self.input_shape = tuple(self.input_shape)
        if not self.layers or not isinstance(self.layers[-1], Softmax):
            raise ConfigError("network must end with a Softmax layer")
        if not isinstance(self.layers[self.feature_index], FullyConnected):
            raise ConfigError("feature_index must point at a FullyConnected layer")
        self.shapes = self.infer_shapes()
        fc_out = [i for i, l in enumerate(self.layers) if isinstance(l, FullyConnected)]
        if self.shapes[fc_out[-1]] != (2,):
            raise ConfigError("output layer must produce 2 classes")

    def infer_shapes(self):
        """Per-layer output shapes; raises ShapeError if the stack mistypes."""
        shapes = []
        cur = self.input_shape
        for layer in self.layers:
            if isinstance(layer, FullyConnected):
                cur = (int(np.prod(cur)),) if len(cur) > 1 else cur
            cur = output_shape(layer, cur)
            shapes.append(cur)
        return shapes

    @property
    def feature_dim(self):
        return self.shapes[self.feature_index][0]

    def to_dict(self):
        return {
            "input_shape": list(self.input_shape),
            "layers": [layer_to_dict(l) for l in self.layers],
            "feature_index": self.feature_index,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            input_shape=tuple(d["input_shape"]),
            layers=[layer_from_dict(ld) for ld in d["layers"]],
            feature_index=int(d["feature_index"]),
        )

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def default_spec(frames=1, conv_channels=(32, 64, 96, 96, 64), fc_widths=(1024, 1024),
                 lrn=LRN(), dropout_rate=0.5, input_size=128):
    """Five-conv / three-FC stack on a (3*frames, size, size) input."""
    c1, c2, c3, c4, c5 = conv_channels
    f1, f2 = fc_widths
    layers = [
        Conv(c1, (7, 7), stride=2, pad=0), ReLU(), lrn, MaxPool(3, 2),
        Conv(c2, (5, 5), stride=1, pad=2), ReLU(), lrn, MaxPool(3, 2),
        Conv(c3, (3, 3), stride=1, pad=1), ReLU(),
        Conv(c4, (3, 3), stride=1, pad=1), ReLU(),
        Conv(c5, (3, 3), stride=1, pad=1), ReLU(), MaxPool(3, 2),
        FullyConnected(f1), ReLU(), Dropout(dropout_rate),
        FullyConnected(f2), ReLU(), Dropout(dropout_rate),
        FullyConnected(2), Softmax(),
    ]
    feature_index = len(layers) - 1 - 1 - 3  # the last hidden FC
    return NetworkSpec((3 * frames, input_size, input_size), layers, feature_index)


def init_params(spec, rng, scheme="he", std=0.01, dtype=np.float32):
    """Per-layer weight/bias tensors, keyed by layer index in stack order.

    "he" scales the Gaussian by sqrt(2 / fan_in); "gaussian" uses the fixed
    std. Biases start at zero either way.
    """
    params = {}
    cur = spec.input_shape
    for i, layer in enumerate(spec.layers):
        if isinstance(layer, Conv):
            kh, kw = layer.kernel
            fan_in = cur[0] * kh * kw
            s = np.sqrt(2.0 / fan_in) if scheme == "he" else std
            params[i] = {
                "w": (rng.standard_normal((layer.out_channels, cur[0], kh, kw)) * s).astype(dtype),
                "b": np.zeros(layer.out_channels, dtype=dtype),
            }
        elif isinstance(layer, FullyConnected):
            fan_in = int(np.prod(cur))
            s = np.sqrt(2.0 / fan_in) if scheme == "he" else std
            params[i] = {
                "w": (rng.standard_normal((layer.out_dim, fan_in)) * s).astype(dtype),
                "b": np.zeros(layer.out_dim, dtype=dtype),
            }
        cur = spec.shapes[i]
    return params


def _check_batch(spec, batch):
    if batch.ndim != 4 or tuple(batch.shape[1:]) != spec.input_shape:
        raise ShapeError(f"batch shape {batch.shape} != (N, {spec.input_shape})")


def forward(spec, params, batch, mode="eval", rng=None, masks=None):
    """Full pass. Returns (probabilities, features, caches).

    caches is None in eval mode; in train mode it carries what backward
    needs, including the pre-softmax logits.
    """
    batch = np.asarray(batch)
    _check_batch(spec, batch)
    train = mode == "train"
    x = batch
    features = None
    caches = [] if train else None
    for i, layer in enumerate(spec.layers):
        mask = None if masks is None else masks.get(i)
        x, cache = layer_forward(layer, x, params.get(i), mode=mode, rng=rng, mask=mask)
        if train:
            caches.append(cache)
        if i == spec.feature_index:
            features = x
    return x, features, caches


def forward_logits(spec, params, batch, mode="train", rng=None, masks=None):
    """Pass stopping before the final softmax; returns (logits, features, caches)."""
    batch = np.asarray(batch)
    _check_batch(spec, batch)
    x = batch
    features = None
    caches = []
    for i, layer in enumerate(spec.layers[:-1]):
        mask = None if masks is None else masks.get(i)
        x, cache = layer_forward(layer, x, params.get(i), mode=mode, rng=rng, mask=mask)
        caches.append(cache)
        if i == spec.feature_index:
            features = x
    return x, features, caches


def backward(spec, params, caches, grad_logits):
    """Backpropagate from the logits gradient; returns grads keyed like params."""
    grads = {}
    g = grad_logits
    for i in range(len(spec.layers) - 2, -1, -1):
        layer = spec.layers[i]
        g, gp = layer_backward(layer, g, caches[i], params.get(i))
        if gp is not None:
            grads[i] = gp
    return grads


def network_forward(spec, params, batch, mode="eval", rng=None):
    """(probabilities, features) as the classifier-facing surface."""
    probs, features, _ = forward(spec, params, batch, mode=mode, rng=rng)
    return probs, features
