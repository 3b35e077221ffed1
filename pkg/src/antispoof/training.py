"""SGD-with-momentum training loop, deterministically seeded."""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .layers import softmax_cross_entropy
from .network import backward, forward_logits, init_params


@dataclass
class TrainConfig:
    learning_rate: float = 0.001
    weight_decay: float = 0.001
    momentum: float = 0.9
    batch_size: int = 32
    epochs: int = 30
    rng_seed: int = 0
    init: str = "he"          # "he" | "gaussian"
    init_std: float = 0.01    # used by the "gaussian" scheme

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be > 0")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError("momentum must be in [0, 1)")
        if self.weight_decay < 0:
            raise ConfigError("weight_decay must be >= 0")
        if self.batch_size < 1 or self.epochs < 1:
            raise ConfigError("batch_size and epochs must be positive")

    def to_dict(self):
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def sgd_update(params, grads, velocity, cfg):
    """v' = momentum*v - lr*(grad + weight_decay*param); param' = param + v'."""
    for i, g in grads.items():
        for key in g:
            p = params[i][key]
            v = velocity[i][key]
            v *= cfg.momentum
            v -= cfg.learning_rate * (g[key] + cfg.weight_decay * p)
            p += v
    return params, velocity


def zero_velocity(params):
    return {i: {k: np.zeros_like(v) for k, v in layer.items()} for i, layer in params.items()}


def train(spec, x, y, cfg, params=None, log=None):
    """Train on (x, y); returns (params, per-epoch mean losses).

    Three independent rng streams (init, shuffling, dropout) all derive
    from cfg.rng_seed, so two runs with the same config and data order
    produce bit-identical parameters.
    """
    seq = np.random.SeedSequence(cfg.rng_seed)
    init_rng, shuffle_rng, dropout_rng = (np.random.default_rng(s) for s in seq.spawn(3))
    if params is None:
        params = init_params(spec, init_rng, scheme=cfg.init, std=cfg.init_std)
    velocity = zero_velocity(params)
    x = np.ascontiguousarray(x, dtype=np.float32)
    y = np.asarray(y, dtype=np.int64)
    n = x.shape[0]
    history = []
    for epoch in range(cfg.epochs):
        order = shuffle_rng.permutation(n)
        losses = []
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            logits, _, caches = forward_logits(spec, params, x[idx], mode="train", rng=dropout_rng)
            loss, grad_logits = softmax_cross_entropy(logits, y[idx])
            grads = backward(spec, params, caches, grad_logits)
            sgd_update(params, grads, velocity, cfg)
            losses.append(loss)
        history.append(float(np.mean(losses)))
        if log is not None:
            log(epoch, history[-1])
    return params, history
