"""Simplex-weighted blending of base learners and greedy forward construction."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from synergy.errors import FormatError, InvariantError, ShapeError

SIMPLEX_TOL = 1e-9


@dataclass(frozen=True)
class BaseLearnerEntry:
    id: str
    val_predictions: np.ndarray


@dataclass(frozen=True)
class EnsembleModel:
    member_ids: tuple
    weights: tuple
    val_mse: float = float("nan")

    def __post_init__(self):
        check_simplex(self.weights)
        if len(set(self.member_ids)) != len(self.member_ids):
            raise InvariantError("ensemble members must be unique")
        if len(self.member_ids) != len(self.weights):
            raise ShapeError("one weight per member required")

    def predict(self, predictions_by_id: dict) -> np.ndarray:
        return weighted_predict([predictions_by_id[m] for m in self.member_ids], self.weights)


def check_simplex(weights):
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or len(w) == 0:
        raise InvariantError("weights must be a non-empty vector")
    if np.any(w < 0) or np.any(w > 1) or abs(w.sum() - 1.0) > SIMPLEX_TOL:
        raise InvariantError(f"weights {w.tolist()} are not on the unit simplex")
    return w


def _stack(predictions):
    arrays = [np.asarray(p, dtype=np.float64) for p in predictions]
    if not arrays:
        raise ShapeError("no prediction vectors")
    n = len(arrays[0])
    if any(a.ndim != 1 or len(a) != n for a in arrays):
        raise ShapeError(f"misaligned prediction lengths {[len(a) for a in arrays]}")
    return np.vstack(arrays)


def weighted_predict(predictions, weights) -> np.ndarray:
    stacked = _stack(predictions)
    w = check_simplex(weights)
    if len(w) != stacked.shape[0]:
        raise ShapeError(f"{stacked.shape[0]} prediction vectors but {len(w)} weights")
    out = np.zeros(stacked.shape[1])
    for wi, p in zip(w, stacked):
        out += wi * p
    return out


def _mse(pred, y):
    d = pred - y
    return float(np.mean(d * d))


def grid_points(step: float) -> np.ndarray:
    n = int(round(1.0 / step))
    if n < 1 or abs(n * step - 1.0) > 1e-9:
        raise ValueError(f"grid step {step} must divide 1 evenly")
    return np.arange(n + 1) / n


def search_mixing_weight(current, candidate, y, step: float = 0.005):
    """Best ``gamma`` on the grid for ``(1 - gamma) * current + gamma * candidate``.

    Returns ``(gamma, mse)``; ties resolve to the smallest gamma.
    """
    cur, cand = _stack([current, candidate])
    y = np.asarray(y, dtype=np.float64)
    if len(y) != len(cur):
        raise ShapeError(f"{len(y)} targets vs {len(cur)} predictions")
    best_gamma, best_mse = 0.0, _mse(cur, y)
    for gamma in grid_points(step)[1:]:
        m = _mse((1.0 - gamma) * cur + gamma * cand, y)
        if m < best_mse:
            best_gamma, best_mse = float(gamma), m
    return best_gamma, best_mse


def greedy_forward_ensemble(entries, y, step: float = 0.005, rel_tol: float = 1e-4) -> EnsembleModel:
    """Add members best-MSE first, one weight search per member, until no gain."""
    entries = list(entries)
    if not entries:
        raise ValueError("at least one base learner is required")
    y = np.asarray(y, dtype=np.float64)
    preds = _stack([e.val_predictions for e in entries])
    if preds.shape[1] != len(y):
        raise ShapeError(f"{len(y)} targets vs {preds.shape[1]} predictions")
    scored = sorted(((_mse(p, y), e.id, p) for e, p in zip(entries, preds)), key=lambda t: (t[0], t[1]))
    current_mse, first_id, current = scored[0]
    members, weights = [first_id], [1.0]
    for _, member_id, pred in scored[1:]:
        if member_id in members:
            continue
        gamma, new_mse = search_mixing_weight(current, pred, y, step)
        if gamma <= 0.0 or current_mse <= 0.0 or (current_mse - new_mse) / current_mse < rel_tol:
            break
        weights = [w * (1.0 - gamma) for w in weights] + [gamma]
        members.append(member_id)
        current = (1.0 - gamma) * current + gamma * pred
        current_mse = new_mse
    total = sum(weights)
    weights = tuple(w / total for w in weights)
    return EnsembleModel(tuple(members), weights, current_mse)


def joint_grid_weights(predictions, y, step: float = 0.05):
    """Exhaustive simplex grid for at most three members (cross-check mode)."""
    stacked = _stack(predictions)
    if stacked.shape[0] > 3:
        raise ValueError("joint grid search supports at most 3 members")
    if step < 0.05:
        raise ValueError("joint grid step must be >= 0.05")
    n = int(round(1.0 / step))
    grid_points(step)
    y = np.asarray(y, dtype=np.float64)
    best = None
    for combo in itertools.product(range(n + 1), repeat=stacked.shape[0] - 1):
        if sum(combo) > n:
            continue
        counts = (*combo, n - sum(combo))
        w = np.array(counts) / n
        m = _mse(w @ stacked, y)
        if best is None or m < best[1]:
            best = (tuple(float(v) for v in w), m)
    return best


def write_ensemble(model: EnsembleModel, path) -> None:
    lines = [f"{m} {w!r}" for m, w in zip(model.member_ids, model.weights)]
    lines.append(f"# validation_mse {model.val_mse!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_ensemble(path) -> EnsembleModel:
    members, weights, mse = [], [], float("nan")
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "validation_mse":
                mse = float(parts[1])
            continue
        parts = line.split()
        if len(parts) != 2:
            raise FormatError(f"bad ensemble line {line!r}")
        members.append(parts[0])
        weights.append(float(parts[1]))
    return EnsembleModel(tuple(members), tuple(weights), mse)


def read_predictions(path) -> np.ndarray:
    """CSV ``row_id,prediction`` (or ``row_id,target``), rows in row_id order."""
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]
    if not lines or lines[0].split(",")[0].strip() != "row_id" or len(lines[0].split(",")) != 2:
        raise FormatError(f"{path}: header must be row_id,<value>")
    ids, values = [], []
    for line in lines[1:]:
        cells = line.split(",")
        if len(cells) != 2:
            raise FormatError(f"{path}: bad row {line!r}")
        ids.append(int(cells[0]))
        values.append(float(cells[1]))
    if ids != list(range(len(ids))):
        raise FormatError(f"{path}: row ids must be 0..n-1 in order")
    return np.array(values, dtype=np.float64)


def write_predictions(values, path, column="prediction") -> None:
    lines = [f"row_id,{column}"] + [f"{i},{float(v)!r}" for i, v in enumerate(values)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
