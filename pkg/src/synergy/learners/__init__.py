"""From-scratch regressors behind one fit/predict contract."""
from synergy.learners.base import Regressor, predict
from synergy.learners.gnn import GNN, GnnConfig, extract_gnnr, fit_gnn
from synergy.learners.linear import ElasticNet, ElasticNetConfig, fit_elastic_net
from synergy.learners.neural import FCNN, FcnnConfig, fit_fcnn
from synergy.learners.serialize import load_model, save_model
from synergy.learners.trees import (
    DecisionTree,
    ForestConfig,
    GbmConfig,
    GradientBoosting,
    RandomForest,
    TreeConfig,
    fit_decision_tree,
    fit_gbm,
    fit_random_forest,
)

__all__ = [
    "DecisionTree",
    "ElasticNet",
    "ElasticNetConfig",
    "FCNN",
    "FcnnConfig",
    "ForestConfig",
    "GNN",
    "GbmConfig",
    "GnnConfig",
    "GradientBoosting",
    "RandomForest",
    "Regressor",
    "TreeConfig",
    "build_learner",
    "extract_gnnr",
    "fit_decision_tree",
    "fit_elastic_net",
    "fit_fcnn",
    "fit_gbm",
    "fit_gnn",
    "fit_random_forest",
    "load_model",
    "predict",
    "save_model",
]


def build_learner(kind, config, n_jobs=1):
    """Unfitted feature-matrix learner for ``kind`` (everything except ``gnn``)."""
    if kind == "enet":
        return ElasticNet(config)
    if kind == "tree":
        return DecisionTree(config)
    if kind == "rf":
        return RandomForest(config, n_jobs=n_jobs)
    if kind == "gbm":
        return GradientBoosting(config)
    if kind == "fcnn":
        return FCNN(config)
    raise ValueError(f"no feature-matrix learner of kind {kind!r}")
