"""Leave-drug-combinations-out CV, metrics and the Wilcoxon signed-rank test."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from synergy.dataio import RepresentationTable, apply_normalizer, assemble_pairs, fit_tanh_normalizer
from synergy.errors import (
    DegenerateSampleError,
    ShapeError,
    SynergyError,
    UndefinedCorrelationError,
)
from synergy.learners import build_learner
from synergy.learners.gnn import GNN

EXACT_WILCOXON_MAX_N = 20


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignment: dict
    seed: int

    def fold_of(self, pair):
        return self.assignment[pair]

    def test_mask(self, pair_ids, fold):
        return np.array([self.assignment[p] == fold for p in pair_ids], dtype=bool)


def make_folds(instances, k: int = 5, seed: int = 0) -> FoldPlan:
    """Shuffle the sorted distinct pair ids with ``seed`` and deal them round-robin."""
    if k < 2:
        raise ValueError("fold count must be >= 2")
    pairs = sorted({inst.pair_id for inst in instances})
    if len(pairs) < k:
        raise ValueError(f"{len(pairs)} distinct pairs cannot fill {k} folds")
    order = np.random.default_rng(seed).permutation(len(pairs))
    assignment = {pairs[j]: pos % k for pos, j in enumerate(order)}
    return FoldPlan(k, assignment, seed)


def _pair(pred, y):
    pred = np.asarray(pred, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if pred.shape != y.shape or pred.ndim != 1:
        raise ShapeError(f"length mismatch: {pred.shape} vs {y.shape}")
    return pred, y


def mse(pred, y) -> float:
    pred, y = _pair(pred, y)
    if len(y) == 0:
        raise ValueError("mse of an empty sample")
    d = pred - y
    return float(np.mean(d * d))


def pearson(pred, y) -> float:
    pred, y = _pair(pred, y)
    if len(y) < 2:
        raise ValueError("pearson needs at least two points")
    a = pred - pred.mean()
    b = y - y.mean()
    saa, sbb = float(a @ a), float(b @ b)
    if saa == 0.0 or sbb == 0.0:
        raise UndefinedCorrelationError("correlation is undefined for a constant input")
    r = float(a @ b) / math.sqrt(saa * sbb)
    return max(-1.0, min(1.0, r))


def signed_ranks(diffs):
    """Average ranks of |d| for nonzero differences; returns (ranks, signs)."""
    d = np.asarray(diffs, dtype=np.float64)
    d = d[d != 0]
    absd = np.abs(d)
    order = np.argsort(absd, kind="stable")
    ranks = np.empty(len(d))
    sorted_abs = absd[order]
    i = 0
    while i < len(d):
        j = i
        while j + 1 < len(d) and sorted_abs[j + 1] == sorted_abs[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks, np.sign(d)


def _exact_null_counts(doubled_ranks):
    """Number of sign patterns giving each doubled positive-rank sum."""
    total = int(sum(doubled_ranks))
    counts = [0] * (total + 1)
    counts[0] = 1
    reach = 0
    for r in doubled_ranks:
        for s in range(reach, -1, -1):
            if counts[s]:
                counts[s + r] += counts[s]
        reach += r
    return counts


def wilcoxon_signed_rank(a, b):
    """Two-sided signed-rank test on paired samples; returns ``(W, p)``.

    ``W = min(W+, W-)``. For up to 20 nonzero differences ``p`` is the exact
    fraction of the 2^n equally likely sign patterns whose ``min(W+, W-)`` is
    at most the observed ``W`` (counted by dynamic programming over doubled,
    hence integer, ranks). Above that a normal approximation with tie and
    continuity corrections is used.
    """
    a, b = _pair(a, b)
    ranks, signs = signed_ranks(a - b)
    n = len(ranks)
    if n == 0:
        raise DegenerateSampleError("all paired differences are zero")
    w_plus = float(ranks[signs > 0].sum())
    w_minus = float(ranks[signs < 0].sum())
    w = min(w_plus, w_minus)
    if n <= EXACT_WILCOXON_MAX_N:
        doubled = [int(round(2 * r)) for r in ranks]
        total = sum(doubled)
        counts = _exact_null_counts(doubled)
        w2 = int(round(2 * w))
        hits = sum(c for s, c in enumerate(counts) if c and min(s, total - s) <= w2)
        return w, hits / 2.0 ** n
    mean = n * (n + 1) / 4.0
    _, tie_counts = np.unique(np.abs(ranks), return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(tie_counts ** 3 - tie_counts)) / 48.0
    z = (abs(w - mean) - 0.5) / math.sqrt(var)
    p = math.erfc(max(z, 0.0) / math.sqrt(2.0))
    return w, min(1.0, p)


@dataclass(frozen=True)
class FoldResult:
    fold: int
    mse: float
    pearson: float


@dataclass(frozen=True)
class EvalReport:
    per_fold: tuple
    std_kind: str = "sample"
    predictions: np.ndarray = field(default=None, repr=False, compare=False)
    targets: np.ndarray = field(default=None, repr=False, compare=False)
    row_folds: np.ndarray = field(default=None, repr=False, compare=False)

    def _stats(self, values):
        values = np.array(values, dtype=np.float64)
        ddof = 1 if self.std_kind == "sample" and len(values) > 1 else 0
        return float(values.mean()), float(values.std(ddof=ddof))

    @property
    def mse_mean(self):
        return self._stats([f.mse for f in self.per_fold])[0]

    @property
    def mse_std(self):
        return self._stats([f.mse for f in self.per_fold])[1]

    @property
    def pearson_mean(self):
        return self._stats([f.pearson for f in self.per_fold])[0]

    @property
    def pearson_std(self):
        return self._stats([f.pearson for f in self.per_fold])[1]

    def summary(self) -> str:
        return (
            f"MSE {self.mse_mean:.1f} ± {self.mse_std:.1f}, "
            f"Pearson {self.pearson_mean:.2f} ± {self.pearson_std:.2f} ({self.std_kind} std)"
        )

    def to_csv(self) -> str:
        lines = ["fold,mse,pearson"]
        lines += [f"{f.fold},{f.mse!r},{f.pearson!r}" for f in self.per_fold]
        lines.append(
            f"# summary mse_mean={self.mse_mean!r} mse_std={self.mse_std!r} "
            f"pearson_mean={self.pearson_mean!r} pearson_std={self.pearson_std!r} std={self.std_kind}"
        )
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8")


def compare_models(report_a: EvalReport, report_b: EvalReport, pairing: str = "fold"):
    """Wilcoxon between two CV runs: per-fold MSE pairs, or per-row absolute errors."""
    if pairing == "fold":
        return wilcoxon_signed_rank([f.mse for f in report_a.per_fold], [f.mse for f in report_b.per_fold])
    if pairing == "instance":
        ea = np.abs(report_a.predictions - report_a.targets)
        eb = np.abs(report_b.predictions - report_b.targets)
        return wilcoxon_signed_rank(ea, eb)
    raise ValueError(f"unknown pairing {pairing!r}")


@dataclass(frozen=True)
class Pipeline:
    """A drug representation plus learner, as evaluated by ``cross_validate``.

    ``kind == "gnn"`` learns its own representation from ``structures``
    (drug id -> MolecularGraph) and ignores ``drug_table``.
    """

    kind: str
    config: object
    drug_table: RepresentationTable = None
    normalize: bool = True
    norm_scale: float = 0.01
    structures: dict = None


class FoldError(SynergyError):
    def __init__(self, fold, exc):
        super().__init__(f"fold {fold}: {exc}")
        self.fold = fold
        self.__cause__ = exc


def _fit_predict_fold(pipeline: Pipeline, instances, cell_table, plan, fold):
    train = [i for i in instances if plan.fold_of(i.pair_id) != fold]
    test = [i for i in instances if plan.fold_of(i.pair_id) == fold]
    if not train or not test:
        raise ValueError("empty train or test split")
    if pipeline.kind == "gnn":
        model = GNN(pipeline.config)

        def pairs_and_cells(rows):
            pairs = [(pipeline.structures[i.drug_a], pipeline.structures[i.drug_b]) for i in rows]
            pairs += [(b, a) for a, b in pairs]
            cells = cell_table.rows(i.cell_line for i in rows)
            return pairs, np.vstack([cells, cells])

        p_train, c_train = pairs_and_cells(train)
        y_train = np.array([i.score for i in train] * 2)
        model.fit(p_train, c_train, y_train)
        p_test, c_test = pairs_and_cells(test)
        pred = model.predict(p_test, c_test)
        y_test = np.array([i.score for i in test] * 2)
        return pred, y_test
    table = pipeline.drug_table
    if pipeline.normalize:
        train_drugs = {d for i in train for d in (i.drug_a, i.drug_b)}
        table = apply_normalizer(fit_tanh_normalizer(table, train_drugs, pipeline.norm_scale), table)
    train_ds = assemble_pairs(train, table, cell_table)
    test_ds = assemble_pairs(test, table, cell_table)
    model = build_learner(pipeline.kind, pipeline.config)
    model.fit(train_ds.features, train_ds.targets)
    return model.predict(test_ds.features), test_ds.targets


def cross_validate(pipeline: Pipeline, instances, cell_table, plan: FoldPlan, n_jobs: int = 1, std_kind="sample"):
    """Fit on folds != f, score fold f, for every f.

    Row order of the returned out-of-fold predictions matches
    ``assemble_pairs(instances, ...)``: every instance, then every mirrored row.
    """
    instances = list(instances)

    def run(fold):
        try:
            return _fit_predict_fold(pipeline, instances, cell_table, plan, fold)
        except Exception as exc:  # noqa: BLE001 - re-raised with fold context
            raise FoldError(fold, exc) from exc

    if n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            outputs = list(pool.map(run, range(plan.k)))
    else:
        outputs = [run(f) for f in range(plan.k)]

    n = len(instances)
    folds = np.array([plan.fold_of(i.pair_id) for i in instances])
    row_folds = np.concatenate([folds, folds])
    predictions = np.zeros(2 * n)
    targets = np.zeros(2 * n)
    per_fold = []
    for fold, (pred, y) in enumerate(outputs):
        idx = np.flatnonzero(folds == fold)
        rows = np.concatenate([idx, idx + n])
        predictions[rows] = pred
        targets[rows] = y
        per_fold.append(FoldResult(fold, mse(pred, y), pearson(pred, y)))
    return EvalReport(tuple(per_fold), std_kind, predictions, targets, row_folds)
