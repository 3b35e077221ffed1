"""Forward kernels against nested-loop references, plus backend parity."""

import numpy as np
import pytest

import antispoof.kernels as K
from antispoof.errors import ShapeError

from oracles import conv2d_ref, fc_ref, lrn_ref, maxpool_ref

BACKENDS = [K.numpy_ops]
if K.native_available():
    BACKENDS.append(K.native_ops)

IDS = ["numpy", "native"][: len(BACKENDS)]


@pytest.fixture(params=BACKENDS, ids=IDS)
def ops(request):
    return request.param


# ---------------------------------------------------------------------------
# conv2d
# ---------------------------------------------------------------------------

def test_conv_hand_example(ops):
    x = np.array([[[1, 2, 3], [4, 5, 6], [7, 8, 9]]], dtype=np.float64)
    w = np.ones((1, 1, 2, 2))
    y = ops.conv2d_forward(x[None], w, np.zeros(1), stride=1, pad=0)
    np.testing.assert_allclose(y[0, 0], [[12, 16], [24, 28]])


def test_conv_identity_kernel(ops):
    rng = np.random.default_rng(0)
    x = rng.normal(size=(2, 3, 5, 5))
    w = np.zeros((3, 3, 1, 1))
    for c in range(3):
        w[c, c, 0, 0] = 1.0
    y = ops.conv2d_forward(x, w, np.zeros(3), stride=1, pad=0)
    np.testing.assert_allclose(y, x)


@pytest.mark.parametrize("seed", range(6))
def test_conv_matches_oracle(ops, seed):
    rng = np.random.default_rng(seed)
    n, c, k = rng.integers(1, 4), rng.integers(1, 5), rng.integers(1, 6)
    kh, kw = rng.integers(1, 4), rng.integers(1, 4)
    stride = int(rng.integers(1, 3))
    pad = int(rng.integers(0, 3))
    h = int(rng.integers(kh, kh + 6))
    wd = int(rng.integers(kw, kw + 6))
    x = rng.normal(size=(n, c, h, wd))
    w = rng.normal(size=(k, c, kh, kw))
    b = rng.normal(size=k)
    got = ops.conv2d_forward(x, w, b, stride=stride, pad=pad)
    np.testing.assert_allclose(got, conv2d_ref(x, w, b, stride, pad), atol=1e-10)


def test_conv_spec_case(ops):
    rng = np.random.default_rng(42)
    x = rng.normal(size=(1, 3, 16, 16))
    w = rng.normal(size=(4, 3, 3, 3))
    b = rng.normal(size=4)
    got = ops.conv2d_forward(x, w, b, stride=2, pad=1)
    np.testing.assert_allclose(got, conv2d_ref(x, w, b, 2, 1), atol=1e-5)


def test_conv_channel_mismatch(ops):
    with pytest.raises(ShapeError):
        ops.conv2d_forward(np.zeros((1, 3, 4, 4)), np.zeros((2, 4, 2, 2)), np.zeros(2), 1, 0)


def test_conv_no_window_placement(ops):
    with pytest.raises(ShapeError):
        ops.conv2d_forward(np.zeros((1, 1, 2, 2)), np.zeros((1, 1, 5, 5)), np.zeros(1), 1, 0)


def test_conv_backward_zero_grad(ops):
    rng = np.random.default_rng(1)
    x = rng.normal(size=(2, 2, 6, 6))
    w = rng.normal(size=(3, 2, 3, 3))
    gy = np.zeros((2, 3, 4, 4))
    gx, gw, gb = ops.conv2d_backward(gy, x, w, stride=1, pad=0)
    assert not gx.any() and not gw.any() and not gb.any()


def test_conv_backward_identity(ops):
    rng = np.random.default_rng(2)
    x = rng.normal(size=(1, 1, 4, 4))
    w = np.ones((1, 1, 1, 1))
    gy = rng.normal(size=(1, 1, 4, 4))
    gx, _, _ = ops.conv2d_backward(gy, x, w, stride=1, pad=0)
    np.testing.assert_allclose(gx, gy)


@pytest.mark.parametrize("stride,pad", [(1, 0), (2, 1), (1, 2)])
def test_conv_backward_finite_difference(ops, stride, pad):
    rng = np.random.default_rng(3)
    x = rng.normal(size=(2, 2, 5, 5))
    w = rng.normal(size=(3, 2, 3, 3))
    b = rng.normal(size=3)
    y0 = ops.conv2d_forward(x, w, b, stride, pad)
    gy = rng.normal(size=y0.shape)
    gx, gw, gb = ops.conv2d_backward(gy, x, w, stride, pad)

    def loss(xv, wv, bv):
        return float(np.sum(ops.conv2d_forward(xv, wv, bv, stride, pad) * gy))

    h = 1e-3
    for arr, grad in ((x, gx), (w, gw), (b, gb)):
        idx = [np.unravel_index(i, arr.shape)
               for i in rng.choice(arr.size, size=min(20, arr.size), replace=False)]
        for ij in idx:
            orig = arr[ij]
            arr[ij] = orig + h
            up = loss(x, w, b)
            arr[ij] = orig - h
            dn = loss(x, w, b)
            arr[ij] = orig
            num = (up - dn) / (2 * h)
            denom = max(abs(num), abs(grad[ij]), 1e-8)
            assert abs(num - grad[ij]) / denom < 1e-3


def test_conv_grad_bias_is_sum(ops):
    rng = np.random.default_rng(4)
    x = rng.normal(size=(2, 3, 7, 7))
    w = rng.normal(size=(4, 3, 3, 3))
    gy = rng.normal(size=(2, 4, 5, 5))
    _, _, gb = ops.conv2d_backward(gy, x, w, stride=1, pad=0)
    np.testing.assert_allclose(gb, gy.sum(axis=(0, 2, 3)), atol=1e-10)


# ---------------------------------------------------------------------------
# maxpool
# ---------------------------------------------------------------------------

def test_maxpool_hand_example(ops):
    x = np.array([[[[1.0, 2.0], [3.0, 4.0]]]])
    y, _ = ops.maxpool_forward(x, window=2, stride=2)
    np.testing.assert_allclose(y, [[[[4.0]]]])


def test_maxpool_constant(ops):
    x = np.full((1, 2, 6, 6), 3.5)
    y, _ = ops.maxpool_forward(x, window=3, stride=2)
    assert (y == 3.5).all()


@pytest.mark.parametrize("seed", range(5))
def test_maxpool_matches_oracle(ops, seed):
    rng = np.random.default_rng(seed)
    window = int(rng.integers(2, 4))
    stride = int(rng.integers(1, 3))
    h = int(rng.integers(window, window + 7))
    x = rng.normal(size=(2, 3, h, h))
    y, arg = ops.maxpool_forward(x, window, stride)
    y_ref, arg_ref = maxpool_ref(x, window, stride)
    np.testing.assert_allclose(y, y_ref)
    np.testing.assert_array_equal(arg, arg_ref)


def test_maxpool_tie_first_occurrence(ops):
    x = np.zeros((1, 1, 2, 2))
    _, arg = ops.maxpool_forward(x, window=2, stride=2)
    assert arg[0, 0, 0, 0] == 0


def test_maxpool_window_too_large(ops):
    with pytest.raises(ShapeError):
        ops.maxpool_forward(np.zeros((1, 1, 2, 2)), window=3, stride=1)


def test_maxpool_backward_routes_to_argmax(ops):
    rng = np.random.default_rng(7)
    x = rng.normal(size=(2, 2, 6, 6))
    y, arg = ops.maxpool_forward(x, window=2, stride=2)
    gy = rng.normal(size=y.shape)
    gx = ops.maxpool_backward(gy, arg, 6, 6)
    # every gradient entry lands on the recorded argmax, sum preserved
    assert gx.shape == x.shape
    np.testing.assert_allclose(gx.sum(), gy.sum(), atol=1e-12)
    flat = gx.reshape(2, 2, -1)
    for n in range(2):
        for c in range(2):
            nz = np.nonzero(flat[n, c])[0]
            assert set(nz) <= set(arg[n, c].ravel().tolist())


# ---------------------------------------------------------------------------
# LRN
# ---------------------------------------------------------------------------

def test_lrn_identity_when_alpha_zero(ops):
    rng = np.random.default_rng(8)
    x = rng.normal(size=(1, 4, 3, 3))
    y = ops.lrn_forward(x, depth=5, k=1.0, alpha=0.0, beta=0.75)
    np.testing.assert_allclose(y, x)


def test_lrn_constant_denominator(ops):
    rng = np.random.default_rng(9)
    x = rng.normal(size=(1, 4, 3, 3))
    y = ops.lrn_forward(x, depth=5, k=4.0, alpha=0.0, beta=0.5)
    np.testing.assert_allclose(y, x / 2.0)


def test_lrn_formula_case(ops):
    rng = np.random.default_rng(10)
    x = rng.normal(size=(2, 5, 4, 4))
    y = ops.lrn_forward(x, depth=5, k=2.0, alpha=1e-4, beta=0.75)
    np.testing.assert_allclose(y, lrn_ref(x, 5, 2.0, 1e-4, 0.75), atol=1e-6)


@pytest.mark.parametrize("seed", range(4))
def test_lrn_matches_oracle(ops, seed):
    rng = np.random.default_rng(seed)
    c = int(rng.integers(1, 8))
    depth = int(rng.choice([1, 3, 5]))
    x = rng.normal(size=(2, c, 3, 3))
    k, alpha, beta = 2.0, 1e-3, 0.75
    got = ops.lrn_forward(x, depth, k, alpha, beta)
    np.testing.assert_allclose(got, lrn_ref(x, depth, k, alpha, beta), atol=1e-10)


def test_lrn_backward_finite_difference(ops):
    rng = np.random.default_rng(11)
    x = rng.normal(size=(1, 5, 3, 3))
    gy = rng.normal(size=x.shape)
    gx = ops.lrn_backward(gy, x, depth=5, k=2.0, alpha=1e-2, beta=0.75)
    h = 1e-5
    for _ in range(25):
        ij = tuple(np.unravel_index(rng.integers(x.size), x.shape))
        orig = x[ij]
        x[ij] = orig + h
        up = float(np.sum(ops.lrn_forward(x, 5, 2.0, 1e-2, 0.75) * gy))
        x[ij] = orig - h
        dn = float(np.sum(ops.lrn_forward(x, 5, 2.0, 1e-2, 0.75) * gy))
        x[ij] = orig
        num = (up - dn) / (2 * h)
        assert abs(num - gx[ij]) / max(abs(num), abs(gx[ij]), 1e-8) < 1e-4


# ---------------------------------------------------------------------------
# fully connected
# ---------------------------------------------------------------------------

def test_fc_identity(ops):
    x = np.array([[1.0, -2.0, 3.0]])
    y = ops.fc_forward(x, np.eye(3), np.zeros(3))
    np.testing.assert_allclose(y, x)


def test_fc_hand_example(ops):
    y = ops.fc_forward(np.array([[1.0, 1.0]]), np.array([[1.0, 2.0], [3.0, 4.0]]), np.zeros(2))
    np.testing.assert_allclose(y, [[3.0, 7.0]])


@pytest.mark.parametrize("seed", range(5))
def test_fc_matches_oracle(ops, seed):
    rng = np.random.default_rng(seed)
    n, d, m = int(rng.integers(1, 5)), int(rng.integers(1, 20)), int(rng.integers(1, 20))
    x = rng.normal(size=(n, d))
    w = rng.normal(size=(m, d))
    b = rng.normal(size=m)
    np.testing.assert_allclose(ops.fc_forward(x, w, b), fc_ref(x, w, b), atol=1e-6)


def test_fc_shape_mismatch(ops):
    with pytest.raises(ShapeError):
        ops.fc_forward(np.zeros((1, 3)), np.zeros((2, 4)), np.zeros(2))


def test_fc_backward(ops):
    rng = np.random.default_rng(12)
    x = rng.normal(size=(3, 5))
    w = rng.normal(size=(4, 5))
    gy = rng.normal(size=(3, 4))
    gx, gw, gb = ops.fc_backward(gy, x, w)
    np.testing.assert_allclose(gx, gy @ w, atol=1e-10)
    np.testing.assert_allclose(gw, gy.T @ x, atol=1e-10)
    np.testing.assert_allclose(gb, gy.sum(axis=0), atol=1e-10)


# ---------------------------------------------------------------------------
# cross-backend parity
# ---------------------------------------------------------------------------

@pytest.mark.skipif(not K.native_available(), reason="compiled kernels not built")
def test_backends_agree():
    rng = np.random.default_rng(13)
    x = rng.normal(size=(2, 3, 12, 12)).astype(np.float32)
    w = rng.normal(size=(4, 3, 3, 3)).astype(np.float32)
    b = rng.normal(size=4).astype(np.float32)
    y_np = K.numpy_ops.conv2d_forward(x, w, b, 2, 1)
    y_nat = K.native_ops.conv2d_forward(x, w, b, 2, 1)
    assert y_np.dtype == y_nat.dtype == np.float32
    np.testing.assert_allclose(y_np, y_nat, atol=1e-4, rtol=1e-4)

    gy = rng.normal(size=y_np.shape).astype(np.float32)
    for a, c in zip(K.numpy_ops.conv2d_backward(gy, x, w, 2, 1),
                    K.native_ops.conv2d_backward(gy, x, w, 2, 1)):
        np.testing.assert_allclose(a, c, atol=1e-3, rtol=1e-3)

    p_np, a_np = K.numpy_ops.maxpool_forward(x, 3, 2)
    p_nat, a_nat = K.native_ops.maxpool_forward(x, 3, 2)
    np.testing.assert_array_equal(a_np, a_nat)
    np.testing.assert_allclose(p_np, p_nat)

    l_np = K.numpy_ops.lrn_forward(x, 5, 2.0, 1e-4, 0.75)
    l_nat = K.native_ops.lrn_forward(x, 5, 2.0, 1e-4, 0.75)
    np.testing.assert_allclose(l_np, l_nat, atol=1e-5, rtol=1e-5)


def test_default_backend_exposed():
    assert K.BACKEND in ("native", "numpy")
    assert hasattr(K, "conv2d_forward")
