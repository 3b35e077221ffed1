"""Binary checkpoint serialization.

Layout: magic "ASCK", little-endian u32 format version, u32 length-prefixed
JSON network spec, then for every parameterized layer in stack order the
weight and bias arrays as little-endian float32, and finally the training
mean tensor. Parameter shapes are derivable from the spec, so no per-array
headers are needed and round-trips are bit-exact.
"""

import io
import struct

import numpy as np

from .errors import ParseError
from .layers import Conv, FullyConnected
from .network import NetworkSpec

MAGIC = b"ASCK"
VERSION = 1


def _param_shapes(spec):
    """(layer_index, weight_shape, bias_shape) in stack order."""
    out = []
    cur = spec.input_shape
    for i, layer in enumerate(spec.layers):
        if isinstance(layer, Conv):
            out.append((i, (layer.out_channels, cur[0], *layer.kernel), (layer.out_channels,)))
        elif isinstance(layer, FullyConnected):
            fan_in = int(np.prod(cur))
            out.append((i, (layer.out_dim, fan_in), (layer.out_dim,)))
        cur = spec.shapes[i]
    return out


def _write_array(fh, arr, shape):
    arr = np.ascontiguousarray(arr, dtype="<f4")
    if arr.shape != tuple(shape):
        raise ParseError(f"parameter shape {arr.shape} does not match spec {tuple(shape)}")
    fh.write(arr.tobytes())


def _read_array(fh, shape):
    count = int(np.prod(shape))
    buf = fh.read(count * 4)
    if len(buf) != count * 4:
        raise ParseError("checkpoint truncated")
    return np.frombuffer(buf, dtype="<f4").reshape(shape).copy()


def save_checkpoint(path, spec, params, mean):
    """Write spec + parameters + training mean; see module docstring."""
    with open(path, "wb") as fh:
        fh.write(dump_bytes(spec, params, mean))


def load_checkpoint(path):
    """Returns (spec, params, mean)."""
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise ParseError(f"{path}: not a checkpoint file (bad magic)")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != VERSION:
            raise ParseError(f"{path}: unsupported checkpoint version {version}")
        (spec_len,) = struct.unpack("<I", fh.read(4))
        spec = NetworkSpec.from_json(fh.read(spec_len).decode("utf-8"))
        params = {}
        for i, w_shape, b_shape in _param_shapes(spec):
            params[i] = {"w": _read_array(fh, w_shape), "b": _read_array(fh, b_shape)}
        mean = _read_array(fh, spec.input_shape)
        extra = fh.read(1)
        if extra:
            raise ParseError(f"{path}: trailing bytes after checkpoint payload")
    return spec, params, mean


def dump_bytes(spec, params, mean):
    """In-memory serialization, also used for hashing and tests."""
    buf = io.BytesIO()
    spec_json = spec.to_json().encode("utf-8")
    buf.write(MAGIC)
    buf.write(struct.pack("<I", VERSION))
    buf.write(struct.pack("<I", len(spec_json)))
    buf.write(spec_json)
    for i, w_shape, b_shape in _param_shapes(spec):
        _write_array(buf, params[i]["w"], w_shape)
        _write_array(buf, params[i]["b"], b_shape)
    _write_array(buf, mean, spec.input_shape)
    return buf.getvalue()
