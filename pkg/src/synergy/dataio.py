"""Representation tables, synergy triples, tanh normalization and pair assembly."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from synergy.errors import (
    DuplicateKeyError,
    FormatError,
    InvalidInstanceError,
    MissingKeyError,
    ParseError,
    ShapeError,
)

SYNERGY_HEADER = ["drug_a", "drug_b", "cell_line", "score"]


@dataclass(frozen=True)
class RepresentationTable:
    """Entity id -> fixed-length feature vector, rows in file order."""

    name: str
    ids: tuple
    vectors: np.ndarray
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        vectors = np.array(self.vectors, dtype=np.float64, copy=True)
        if vectors.ndim != 2:
            raise ShapeError(f"{self.name}: vectors must be a 2-D matrix")
        ids = tuple(str(i) for i in self.ids)
        if len(ids) != vectors.shape[0]:
            raise ShapeError(f"{self.name}: {len(ids)} ids but {vectors.shape[0]} rows")
        if not np.all(np.isfinite(vectors)):
            raise ParseError(f"{self.name}: non-finite feature value")
        index = {}
        for row, key in enumerate(ids):
            if key in index:
                raise DuplicateKeyError(f"{self.name}: duplicate id {key!r}")
            index[key] = row
        vectors.setflags(write=False)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "_index", index)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self):
        return len(self.ids)

    def __contains__(self, key):
        return key in self._index

    def row(self, key: str) -> np.ndarray:
        try:
            return self.vectors[self._index[key]]
        except KeyError:
            raise MissingKeyError(f"id {key!r} not found in table {self.name!r}") from None

    def rows(self, keys: Iterable[str]) -> np.ndarray:
        idx = []
        for key in keys:
            if key not in self._index:
                raise MissingKeyError(f"id {key!r} not found in table {self.name!r}")
            idx.append(self._index[key])
        return self.vectors[np.asarray(idx, dtype=np.intp)].reshape(len(idx), self.dim)


@dataclass(frozen=True)
class SynergyInstance:
    drug_a: str
    drug_b: str
    cell_line: str
    score: float

    def __post_init__(self):
        if self.drug_a == self.drug_b:
            raise InvalidInstanceError(f"drug_a equals drug_b ({self.drug_a!r})")
        if not math.isfinite(self.score):
            raise ParseError(f"non-finite synergy score {self.score!r}")

    @property
    def pair_id(self) -> str:
        return pair_id(self.drug_a, self.drug_b)


def pair_id(drug_a: str, drug_b: str) -> str:
    """Order-free key of a drug pair, used for fold grouping."""
    a, b = sorted((drug_a, drug_b))
    return f"{a}|{b}"


def _read_rows(path):
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    rows = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        if '"' in line:
            raise FormatError(f"{path}:{lineno}: quoted fields are not supported")
        rows.append((lineno, [cell.strip() for cell in line.split(",")]))
    if not rows:
        raise FormatError(f"{path}: missing header")
    return rows[0][1], rows[1:]


def _parse_float(cell, where):
    try:
        value = float(cell)
    except ValueError:
        raise ParseError(f"{where}: cannot parse {cell!r} as a number") from None
    if not math.isfinite(value):
        raise ParseError(f"{where}: non-finite value {cell!r}")
    return value


def load_representation_table(path, name: str) -> RepresentationTable:
    """Read a CSV with header ``id,f1,...,fD``."""
    header, body = _read_rows(path)
    if header[0] != "id" or len(header) < 2:
        raise FormatError(f"{path}: header must be id,f1,...,fD")
    width = len(header)
    ids, vectors = [], []
    seen = set()
    for lineno, cells in body:
        if len(cells) != width:
            raise FormatError(f"{path}:{lineno}: expected {width} fields, got {len(cells)}")
        key = cells[0]
        if key in seen:
            raise DuplicateKeyError(f"{path}:{lineno}: duplicate id {key!r}")
        seen.add(key)
        ids.append(key)
        vectors.append([_parse_float(c, f"{path}:{lineno}") for c in cells[1:]])
    matrix = np.array(vectors, dtype=np.float64).reshape(len(ids), width - 1)
    return RepresentationTable(name, tuple(ids), matrix)


def write_representation_table(table: RepresentationTable, path) -> None:
    lines = ["id," + ",".join(f"f{j + 1}" for j in range(table.dim))]
    for key, vec in zip(table.ids, table.vectors):
        if "," in key or '"' in key:
            raise FormatError(f"id {key!r} cannot be written without quoting")
        lines.append(key + "," + ",".join(repr(float(v)) for v in vec))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_synergy_triples(path) -> list[SynergyInstance]:
    """Read ``drug_a,drug_b,cell_line,score`` rows; no deduplication."""
    header, body = _read_rows(path)
    if header != SYNERGY_HEADER:
        raise FormatError(f"{path}: header must be {','.join(SYNERGY_HEADER)}")
    out = []
    for lineno, cells in body:
        if len(cells) != 4:
            raise FormatError(f"{path}:{lineno}: expected 4 fields, got {len(cells)}")
        score = _parse_float(cells[3], f"{path}:{lineno}")
        try:
            out.append(SynergyInstance(cells[0], cells[1], cells[2], score))
        except InvalidInstanceError as exc:
            raise InvalidInstanceError(f"{path}:{lineno}: {exc}") from None
    return out


def write_synergy_triples(instances: Sequence[SynergyInstance], path) -> None:
    lines = [",".join(SYNERGY_HEADER)]
    lines += [f"{i.drug_a},{i.drug_b},{i.cell_line},{i.score!r}" for i in instances]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class TanhNormalizer:
    """Maps x to 0.5 * (tanh(scale * (x - mean) / std) + 1) per feature."""

    means: np.ndarray
    stds: np.ndarray
    scale: float = 0.01

    @property
    def dim(self):
        return len(self.means)

    def transform(self, matrix: np.ndarray) -> np.ndarray:
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[1] != self.dim:
            raise ShapeError(f"expected width {self.dim}, got shape {matrix.shape}")
        live = self.stds > 0
        out = np.full(matrix.shape, 0.5)
        z = (matrix[:, live] - self.means[live]) / self.stds[live]
        out[:, live] = 0.5 * (np.tanh(self.scale * z) + 1.0)
        return out


def fit_tanh_normalizer(table: RepresentationTable, training_ids, scale: float = 0.01) -> TanhNormalizer:
    """Per-feature mean and population std over the training rows only."""
    training_ids = sorted(set(training_ids))
    if not training_ids:
        raise ValueError("training_ids must be non-empty")
    rows = table.rows(training_ids)
    means = rows.mean(axis=0)
    stds = rows.std(axis=0)
    # Round-off can leave a tiny std on a constant column.
    stds[np.all(rows == rows[:1], axis=0)] = 0.0
    means.setflags(write=False)
    stds.setflags(write=False)
    return TanhNormalizer(means, stds, float(scale))


def apply_normalizer(normalizer: TanhNormalizer, table: RepresentationTable) -> RepresentationTable:
    if table.dim != normalizer.dim:
        raise ShapeError(f"table {table.name!r} has dim {table.dim}, normalizer expects {normalizer.dim}")
    return RepresentationTable(table.name, table.ids, normalizer.transform(table.vectors))


@dataclass(frozen=True)
class RowMeta:
    pair_id: str
    cell_line: str
    mirrored: bool


@dataclass(frozen=True)
class AssembledDataset:
    """Rows ``[drug_a | drug_b | cell]`` for every instance, then the drug-swapped copies."""

    features: np.ndarray
    targets: np.ndarray
    row_meta: tuple
    drug_dim: int
    cell_dim: int

    @property
    def n_instances(self):
        return len(self.targets) // 2

    def __len__(self):
        return len(self.targets)

    def pair_ids(self) -> np.ndarray:
        return np.array([m.pair_id for m in self.row_meta], dtype=object)


def assemble_pairs(instances, drug_table: RepresentationTable, cell_table: RepresentationTable) -> AssembledDataset:
    instances = list(instances)
    for inst in instances:
        for key in (inst.drug_a, inst.drug_b):
            if key not in drug_table:
                raise MissingKeyError(f"drug id {key!r} not found in table {drug_table.name!r}")
        if inst.cell_line not in cell_table:
            raise MissingKeyError(f"cell line id {inst.cell_line!r} not found in table {cell_table.name!r}")
    a = drug_table.rows(i.drug_a for i in instances)
    b = drug_table.rows(i.drug_b for i in instances)
    c = cell_table.rows(i.cell_line for i in instances)
    features = np.vstack([np.hstack([a, b, c]), np.hstack([b, a, c])])
    scores = np.array([i.score for i in instances], dtype=np.float64)
    targets = np.concatenate([scores, scores])
    meta = tuple(RowMeta(i.pair_id, i.cell_line, False) for i in instances)
    meta += tuple(RowMeta(i.pair_id, i.cell_line, True) for i in instances)
    return AssembledDataset(features, targets, meta, drug_table.dim, cell_table.dim)


def write_assembled(dataset: AssembledDataset, path) -> None:
    """CSV ``pair_id,mirrored,cell_line,target,x1..xW`` with round-trip float text."""
    width = dataset.features.shape[1]
    lines = ["pair_id,mirrored,cell_line,target," + ",".join(f"x{j + 1}" for j in range(width))]
    for meta, target, row in zip(dataset.row_meta, dataset.targets, dataset.features):
        cells = [meta.pair_id, str(int(meta.mirrored)), meta.cell_line, repr(float(target))]
        cells += [repr(float(v)) for v in row]
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_assembled(path, drug_dim: int, cell_dim: int) -> AssembledDataset:
    header, body = _read_rows(path)
    if header[:4] != ["pair_id", "mirrored", "cell_line", "target"]:
        raise FormatError(f"{path}: not an assembled dataset export")
    width = len(header) - 4
    if width != 2 * drug_dim + cell_dim:
        raise ShapeError(f"{path}: width {width} != 2*{drug_dim}+{cell_dim}")
    meta, targets, rows = [], [], []
    for lineno, cells in body:
        if len(cells) != width + 4:
            raise FormatError(f"{path}:{lineno}: expected {width + 4} fields")
        meta.append(RowMeta(cells[0], cells[2], cells[1] == "1"))
        targets.append(_parse_float(cells[3], f"{path}:{lineno}"))
        rows.append([_parse_float(c, f"{path}:{lineno}") for c in cells[4:]])
    return AssembledDataset(
        np.array(rows, dtype=np.float64).reshape(len(rows), width),
        np.array(targets, dtype=np.float64),
        tuple(meta),
        drug_dim,
        cell_dim,
    )
