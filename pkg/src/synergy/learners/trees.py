"""Regression trees, random forests and gradient boosting on shared split search."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from synergy import _backend
from synergy.errors import ConfigError
from synergy.learners.base import Regressor, check_predict_input, check_xy


@dataclass(frozen=True)
class TreeConfig:
    max_depth: int = 6
    min_samples_leaf: int = 1

    def __post_init__(self):
        if int(self.max_depth) < 1:
            raise ConfigError("must be a positive integer", "max_depth")
        if int(self.min_samples_leaf) < 1:
            raise ConfigError("must be a positive integer", "min_samples_leaf")


@dataclass(frozen=True)
class ForestConfig:
    n_estimators: int = 1000
    tree: TreeConfig = field(default_factory=TreeConfig)
    feature_fraction: float = 1.0 / 3.0
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        if int(self.n_estimators) < 1:
            raise ConfigError("must be a positive integer", "n_estimators")
        if not 0.0 < self.feature_fraction <= 1.0:
            raise ConfigError("must lie in (0, 1]", "feature_fraction")


@dataclass(frozen=True)
class GbmConfig:
    n_estimators: int = 1000
    learning_rate: float = 0.05
    tree: TreeConfig = field(default_factory=TreeConfig)

    def __post_init__(self):
        if int(self.n_estimators) < 0:
            raise ConfigError("must be a non-negative integer", "n_estimators")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ConfigError("must lie in (0, 1]", "learning_rate")


class DecisionTree(Regressor):
    """Greedy variance-reduction regression tree stored as flat node arrays.

    Internal nodes send ``x[feature] <= threshold`` left. Leaves have
    ``feature == -1``.
    """

    kind = "tree"

    def __init__(self, config: TreeConfig = TreeConfig()):
        self.config = config

    def fit(self, X, y, samples=None, n_sub_features=None, rng=None):
        X, y = check_xy(X, y)
        self.n_features_ = X.shape[1]
        if samples is None:
            samples = np.arange(X.shape[0], dtype=np.intp)
        self._build(X, y, np.asarray(samples, dtype=np.intp), n_sub_features, rng)
        return self

    def _build(self, X, y, samples, n_sub_features, rng):
        cfg = self.config
        n_features = X.shape[1]
        all_features = np.arange(n_features, dtype=np.intp)
        feature, threshold, left, right, value, depth_of = [], [], [], [], [], []

        def new_node(idx, depth):
            node = len(value)
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(float(np.mean(y[idx])))
            depth_of.append(depth)
            return node

        root = new_node(samples, 0)
        stack = [(root, samples, 0)]
        while stack:
            node, idx, depth = stack.pop()
            if depth >= cfg.max_depth or len(idx) < 2 * cfg.min_samples_leaf:
                continue
            ys = y[idx]
            if ys.max() == ys.min():
                continue
            if n_sub_features is not None and n_sub_features < n_features:
                feats = np.sort(rng.choice(n_features, size=n_sub_features, replace=False)).astype(np.intp)
            else:
                feats = all_features
            f, thr, _ = _backend.best_split(X, y, idx, feats, cfg.min_samples_leaf)
            if f < 0:
                continue
            go_left = X[idx, f] <= thr
            li, ri = idx[go_left], idx[~go_left]
            feature[node] = f
            threshold[node] = thr
            left[node] = new_node(li, depth + 1)
            right[node] = new_node(ri, depth + 1)
            # Right pushed first so nodes are numbered in depth-first, left-first order.
            stack.append((right[node], ri, depth + 1))
            stack.append((left[node], li, depth + 1))

        self.feature_ = np.array(feature, dtype=np.int64)
        self.threshold_ = np.array(threshold, dtype=np.float64)
        self.left_ = np.array(left, dtype=np.int64)
        self.right_ = np.array(right, dtype=np.int64)
        self.value_ = np.array(value, dtype=np.float64)
        self.depth_ = int(max(depth_of))

    def predict(self, X):
        X = check_predict_input(X, self.n_features_)
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        for _ in range(self.depth_):
            f = self.feature_[node]
            internal = f >= 0
            if not internal.any():
                break
            go_left = X[rows, np.where(internal, f, 0)] <= self.threshold_[node]
            nxt = np.where(go_left, self.left_[node], self.right_[node])
            node = np.where(internal, nxt, node)
        return self.value_[node]

    @property
    def n_leaves(self):
        return int(np.sum(self.feature_ < 0))

    def leaf_depths(self):
        depth = np.zeros(len(self.value_), dtype=np.int64)
        for node in range(len(self.value_)):
            if self.feature_[node] >= 0:
                depth[self.left_[node]] = depth[node] + 1
                depth[self.right_[node]] = depth[node] + 1
        return depth[self.feature_ < 0]

    def state(self):
        return {
            "feature": self.feature_,
            "threshold": self.threshold_,
            "left": self.left_,
            "right": self.right_,
            "value": self.value_,
            "meta": np.array([self.n_features_, self.depth_], dtype=np.int64),
        }

    @classmethod
    def from_state(cls, config, arrays, prefix=""):
        tree = cls(config)
        tree.feature_ = arrays[prefix + "feature"]
        tree.threshold_ = arrays[prefix + "threshold"]
        tree.left_ = arrays[prefix + "left"]
        tree.right_ = arrays[prefix + "right"]
        tree.value_ = arrays[prefix + "value"]
        tree.n_features_, tree.depth_ = (int(v) for v in arrays[prefix + "meta"])
        return tree


def fit_decision_tree(X, y, cfg: TreeConfig) -> DecisionTree:
    return DecisionTree(cfg).fit(X, y)


class RandomForest(Regressor):
    """Bagged trees with per-split feature sampling; tree ``i`` uses seed ``seed + i``."""

    kind = "rf"

    def __init__(self, config: ForestConfig = ForestConfig(), n_jobs: int = 1):
        self.config = config
        self.n_jobs = n_jobs

    def _fit_one(self, X, y, i):
        cfg = self.config
        rng = np.random.default_rng(cfg.seed + i)
        n, p = X.shape
        if cfg.bootstrap:
            samples = np.sort(rng.integers(0, n, size=n)).astype(np.intp)
        else:
            samples = np.arange(n, dtype=np.intp)
        k = max(1, int(round(cfg.feature_fraction * p)))
        tree = DecisionTree(cfg.tree)
        return tree.fit(X, y, samples=samples, n_sub_features=k, rng=rng)

    def fit(self, X, y):
        X, y = check_xy(X, y)
        self.n_features_ = X.shape[1]
        indices = range(self.config.n_estimators)
        if self.n_jobs > 1:
            with ThreadPoolExecutor(self.n_jobs) as pool:
                self.trees_ = list(pool.map(lambda i: self._fit_one(X, y, i), indices))
        else:
            self.trees_ = [self._fit_one(X, y, i) for i in indices]
        return self

    def predict(self, X):
        X = check_predict_input(X, self.n_features_)
        total = np.zeros(X.shape[0])
        for tree in self.trees_:
            total += tree.predict(X)
        return total / len(self.trees_)

    def state(self):
        arrays = {}
        for i, tree in enumerate(self.trees_):
            arrays.update({f"t{i}.{k}": v for k, v in tree.state().items()})
        return arrays

    @classmethod
    def from_state(cls, config, arrays):
        model = cls(config)
        model.trees_ = [
            DecisionTree.from_state(config.tree, arrays, prefix=f"t{i}.") for i in range(config.n_estimators)
        ]
        model.n_features_ = model.trees_[0].n_features_
        return model


def fit_random_forest(X, y, cfg: ForestConfig, n_jobs: int = 1) -> RandomForest:
    return RandomForest(cfg, n_jobs=n_jobs).fit(X, y)


class GradientBoosting(Regressor):
    """Squared-loss boosting: ``mean(y) + lr * sum(tree_m(x))``."""

    kind = "gbm"

    def __init__(self, config: GbmConfig = GbmConfig()):
        self.config = config

    def fit(self, X, y):
        X, y = check_xy(X, y)
        cfg = self.config
        self.n_features_ = X.shape[1]
        self.init_ = float(np.mean(y))
        current = np.full(len(y), self.init_)
        self.trees_ = []
        self.train_mse_ = [float(np.mean((y - current) ** 2))]
        for _ in range(cfg.n_estimators):
            tree = DecisionTree(cfg.tree).fit(X, y - current)
            current = current + cfg.learning_rate * tree.predict(X)
            self.trees_.append(tree)
            self.train_mse_.append(float(np.mean((y - current) ** 2)))
        return self

    def predict(self, X):
        X = check_predict_input(X, self.n_features_)
        total = np.full(X.shape[0], self.init_)
        for tree in self.trees_:
            total = total + self.config.learning_rate * tree.predict(X)
        return total

    def state(self):
        arrays = {"init": np.array([self.init_])}
        for i, tree in enumerate(self.trees_):
            arrays.update({f"t{i}.{k}": v for k, v in tree.state().items()})
        arrays["n_features"] = np.array([self.n_features_], dtype=np.int64)
        return arrays

    @classmethod
    def from_state(cls, config, arrays):
        model = cls(config)
        model.init_ = float(arrays["init"][0])
        model.n_features_ = int(arrays["n_features"][0])
        model.trees_ = [
            DecisionTree.from_state(config.tree, arrays, prefix=f"t{i}.") for i in range(config.n_estimators)
        ]
        return model


def fit_gbm(X, y, cfg: GbmConfig) -> GradientBoosting:
    return GradientBoosting(cfg).fit(X, y)


def config_dict(cfg):
    return asdict(cfg)
