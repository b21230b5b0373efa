"""Shared validation helpers and the common regressor surface."""
import numpy as np

from synergy.errors import NumericError, ShapeError


def check_xy(X, y):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeError(f"X must be 2-D, got shape {X.shape}")
    if y.ndim != 1 or len(y) != X.shape[0]:
        raise ShapeError(f"y of shape {y.shape} does not match {X.shape[0]} rows")
    if X.shape[0] == 0:
        raise ShapeError("empty training set")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise NumericError("training data contains non-finite values")
    return X, y


def check_predict_input(X, n_features):
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim == 2 and X.shape[0] == 0:
        return X.reshape(0, n_features) if X.shape[1] in (0, n_features) else _width_error(X, n_features)
    if X.ndim != 2 or X.shape[1] != n_features:
        _width_error(X, n_features)
    return X


def _width_error(X, n_features):
    raise ShapeError(f"model was trained on {n_features} features, got input of shape {X.shape}")


class Regressor:
    """Fit/predict contract shared by every learner.

    Subclasses set ``kind``, keep their config in ``config`` and expose
    ``state()`` / ``from_state()`` for serialization.
    """

    kind = "abstract"
    n_features_ = None

    def fit(self, X, y):
        raise NotImplementedError

    def predict(self, X):
        raise NotImplementedError

    def state(self) -> dict:
        raise NotImplementedError

    @classmethod
    def from_state(cls, config, arrays):
        raise NotImplementedError


def predict(model: Regressor, X) -> np.ndarray:
    return model.predict(X)
