"""Finite-difference validation of the analytic parameter gradients."""

import numpy as np

from .layers import Dropout, dropout_mask, softmax_cross_entropy
from .network import backward, forward_logits


def _relative_error(a, n, floor=1e-10):
    denom = max(abs(a), abs(n))
    if denom < floor:
        return 0.0
    return abs(a - n) / denom


def finite_difference_check(spec, params, batch, labels, step=1e-3,
                            coords_per_layer=100, rng=None):
    """Worst relative error between analytic and central-difference gradients.

    The whole computation runs in float64. Dropout masks (if any) are
    sampled once and frozen across every loss evaluation, otherwise the
    comparison would chase a moving target. Checks up to
    ``coords_per_layer`` randomly chosen coordinates in each parameterized
    layer.
    """
    rng = rng or np.random.default_rng(0)
    batch = np.asarray(batch, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    params64 = {i: {k: v.astype(np.float64) for k, v in layer.items()} for i, layer in params.items()}

    masks = {}
    for i, layer in enumerate(spec.layers):
        if isinstance(layer, Dropout):
            shape = (batch.shape[0], *spec.shapes[i])
            masks[i] = dropout_mask(shape, layer.rate, rng, mode="train").astype(np.float64)

    def loss_of(p):
        logits, _, _ = forward_logits(spec, p, batch, mode="train", masks=masks)
        loss, _ = softmax_cross_entropy(logits, labels)
        return loss

    logits, _, caches = forward_logits(spec, params64, batch, mode="train", masks=masks)
    _, grad_logits = softmax_cross_entropy(logits, labels)
    grads = backward(spec, params64, caches, grad_logits)

    worst = 0.0
    for i in sorted(grads):
        for key in ("w", "b"):
            arr = params64[i][key]
            n_coords = min(coords_per_layer, arr.size)
            chosen = rng.choice(arr.size, size=n_coords, replace=False)
            for flat in chosen:
                ij = np.unravel_index(flat, arr.shape)
                orig = arr[ij]
                arr[ij] = orig + step
                up = loss_of(params64)
                arr[ij] = orig - step
                down = loss_of(params64)
                arr[ij] = orig
                numeric = (up - down) / (2.0 * step)
                worst = max(worst, _relative_error(grads[i][key][ij], numeric))
    return worst
