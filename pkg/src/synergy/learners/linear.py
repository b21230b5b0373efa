"""Elastic net by cyclic coordinate descent.

Minimizes ``(1/2n)||y - Xb - c||^2 + lam * (mix * ||b||_1 + (1 - mix)/2 * ||b||^2)``
with an unpenalized intercept ``c``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from synergy import _backend
from synergy.errors import ConfigError
from synergy.learners.base import Regressor, check_predict_input, check_xy


@dataclass(frozen=True)
class ElasticNetConfig:
    strength: float = 1.0
    mixing: float = 0.5
    tol: float = 1e-8
    max_sweeps: int = 10000

    def __post_init__(self):
        if not self.strength >= 0:
            raise ConfigError("must be >= 0", "alpha")
        if not 0.0 <= self.mixing <= 1.0:
            raise ConfigError("must lie in [0, 1]", "mixing")
        if not self.tol > 0:
            raise ConfigError("must be > 0", "tol")
        if int(self.max_sweeps) < 1:
            raise ConfigError("must be a positive integer", "max_sweeps")


def soft_threshold(z, t):
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


class ElasticNet(Regressor):
    kind = "enet"

    def __init__(self, config: ElasticNetConfig = ElasticNetConfig()):
        self.config = config

    def fit(self, X, y):
        X, y = check_xy(X, y)
        cfg = self.config
        n, p = X.shape
        x_mean = X.mean(axis=0)
        y_mean = float(y.mean())
        Xc = np.asfortranarray(X - x_mean)
        resid = np.ascontiguousarray(y - y_mean)
        col_sq = np.ascontiguousarray((Xc * Xc).sum(axis=0) / n)
        beta = np.zeros(p)
        l1 = cfg.strength * cfg.mixing
        l2 = cfg.strength * (1.0 - cfg.mixing)
        self.n_sweeps_ = _backend.cd_sweeps(Xc, beta, resid, col_sq, l1, l2, cfg.tol, int(cfg.max_sweeps))
        self.coef_ = beta
        self.intercept_ = y_mean - float(x_mean @ beta)
        self.n_features_ = p
        return self

    def predict(self, X):
        X = check_predict_input(X, self.n_features_)
        return X @ self.coef_ + self.intercept_

    def objective(self, X, y):
        return elastic_net_objective(X, y, self.coef_, self.intercept_, self.config)

    def state(self):
        return {"coef": self.coef_, "intercept": np.array([self.intercept_])}

    @classmethod
    def from_state(cls, config, arrays):
        model = cls(config)
        model.coef_ = arrays["coef"]
        model.intercept_ = float(arrays["intercept"][0])
        model.n_features_ = len(model.coef_)
        return model


def elastic_net_objective(X, y, beta, intercept, cfg: ElasticNetConfig) -> float:
    r = y - X @ beta - intercept
    penalty = cfg.mixing * np.abs(beta).sum() + 0.5 * (1.0 - cfg.mixing) * (beta @ beta)
    return float(0.5 * (r @ r) / len(y) + cfg.strength * penalty)


def fit_elastic_net(X, y, cfg: ElasticNetConfig) -> ElasticNet:
    return ElasticNet(cfg).fit(X, y)
