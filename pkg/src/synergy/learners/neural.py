"""Fully connected regression network trained with mini-batch SGD.

Layout: input -> hidden[0] -> hidden[1] -> 1, ReLU on hidden layers, linear
output, mean squared error, inverted dropout on hidden activations while
training.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from synergy.errors import ConfigError, DivergenceError
from synergy.learners.base import Regressor, check_predict_input, check_xy


@dataclass(frozen=True)
class FcnnConfig:
    hidden: tuple = (3000, 1500)
    learning_rate: float = 1e-4
    dropout: float = 0.0
    epochs: int = 100
    batch_size: int = 64
    seed: int = 0

    def __post_init__(self):
        hidden = tuple(int(h) for h in self.hidden)
        object.__setattr__(self, "hidden", hidden)
        if len(hidden) != 2 or min(hidden) < 1:
            raise ConfigError("must be two positive layer widths", "hidden")
        if not self.learning_rate > 0:
            raise ConfigError("must be > 0", "learning_rate")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("must lie in [0, 1)", "dropout")
        if int(self.epochs) < 1:
            raise ConfigError("must be a positive integer", "epochs")
        if int(self.batch_size) < 1:
            raise ConfigError("must be a positive integer", "batch_size")


def init_mlp(sizes, rng):
    """He-uniform weights, zero biases; returns [W0, b0, W1, b1, ...]."""
    params = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / fan_in)
        params.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        params.append(np.zeros(fan_out))
    return params


def dropout_masks(params, n_rows, rate, rng):
    if rate <= 0:
        return None
    keep = 1.0 - rate
    widths = [W.shape[1] for W in params[0:-2:2]]
    return [(rng.random((n_rows, w)) < keep) / keep for w in widths]


def mlp_forward(params, X, masks=None):
    """Returns (predictions, cache)."""
    acts = [X]
    pre = []
    h = X
    n_layers = len(params) // 2
    for layer in range(n_layers):
        W, b = params[2 * layer], params[2 * layer + 1]
        z = h @ W + b
        if layer == n_layers - 1:
            return z[:, 0], (acts, pre, masks)
        pre.append(z)
        h = np.maximum(z, 0.0)
        if masks is not None:
            h = h * masks[layer]
        acts.append(h)


def mlp_backward(params, cache, dout):
    """Gradients for ``params`` and the input, given d(loss)/d(prediction)."""
    acts, pre, masks = cache
    grads = [None] * len(params)
    delta = dout[:, None]
    for layer in range(len(params) // 2 - 1, -1, -1):
        W = params[2 * layer]
        grads[2 * layer] = acts[layer].T @ delta
        grads[2 * layer + 1] = delta.sum(axis=0)
        delta = delta @ W.T
        if layer > 0:
            if masks is not None:
                delta = delta * masks[layer - 1]
            delta = delta * (pre[layer - 1] > 0)
    return grads, delta


def mse_loss_and_grad(params, X, y, masks=None):
    pred, cache = mlp_forward(params, X, masks)
    diff = pred - y
    loss = float(np.mean(diff * diff))
    grads, _ = mlp_backward(params, cache, 2.0 * diff / len(y))
    return loss, grads


class FCNN(Regressor):
    kind = "fcnn"

    def __init__(self, config: FcnnConfig = FcnnConfig()):
        self.config = config

    def fit(self, X, y):
        X, y = check_xy(X, y)
        cfg = self.config
        rng = np.random.default_rng(cfg.seed)
        n, p = X.shape
        self.n_features_ = p
        self.params_ = init_mlp((p, *cfg.hidden, 1), rng)
        self.loss_history_ = []
        for epoch in range(cfg.epochs):
            order = rng.permutation(n)
            total = 0.0
            for start in range(0, n, cfg.batch_size):
                idx = order[start:start + cfg.batch_size]
                masks = dropout_masks(self.params_, len(idx), cfg.dropout, rng)
                with np.errstate(over="ignore", invalid="ignore"):
                    loss, grads = mse_loss_and_grad(self.params_, X[idx], y[idx], masks)
                if not np.isfinite(loss):
                    raise DivergenceError(epoch, loss)
                for param, grad in zip(self.params_, grads):
                    param -= cfg.learning_rate * grad
                total += loss * len(idx)
            epoch_loss = total / n
            if not np.isfinite(epoch_loss) or not all(np.all(np.isfinite(q)) for q in self.params_):
                raise DivergenceError(epoch, epoch_loss)
            self.loss_history_.append(epoch_loss)
        return self

    def predict(self, X):
        X = check_predict_input(X, self.n_features_)
        return mlp_forward(self.params_, X)[0]

    def state(self):
        return {f"p{i}": q for i, q in enumerate(self.params_)}

    @classmethod
    def from_state(cls, config, arrays):
        model = cls(config)
        model.params_ = [arrays[f"p{i}"] for i in range(2 * (len(config.hidden) + 1))]
        model.n_features_ = model.params_[0].shape[0]
        return model


def fit_fcnn(X, y, cfg: FcnnConfig) -> FCNN:
    return FCNN(cfg).fit(X, y)
