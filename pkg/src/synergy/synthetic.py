"""Seeded synthetic drug-pair data with planted, order-free synergy structure.

``python -m synergy.synthetic <dir>`` writes the demo bundle shipped in
``synergy/data/demo``.
"""
from __future__ import annotations

import itertools
import sys
from pathlib import Path

import numpy as np

from synergy.dataio import RepresentationTable, SynergyInstance, write_representation_table, write_synergy_triples

DEMO_SMILES = (
    "CCO",
    "CC(=O)O",
    "C1CCCCC1",
    "CC(C)CC(=O)O",
    "OC1CCNCC1",
    "CN1CCC(CC1)C(=O)O",
    "ClC1CCC(Br)CC1",
    "NC(=O)C1CCCCC1",
    "CC#N",
    "C=CC(=O)OC",
    "OCC(O)CO",
    "FC(F)(F)C1CCCCC1N",
)


def make_synthetic(n_drugs=12, n_cells=3, drug_dim=16, cell_dim=8, noise=2.0, seed=0):
    """Returns (instances, drug_table, cell_table).

    Every unordered drug pair is scored on every cell line, so 12 drugs and
    3 cell lines give 66 pairs and 198 instances.
    """
    rng = np.random.default_rng(seed)
    latent = 3
    z = rng.normal(size=(n_drugs, latent))
    c = rng.normal(size=(n_cells, latent))
    g = rng.normal(size=latent)
    drug_vectors = z @ rng.normal(size=(latent, drug_dim)) + 0.1 * rng.normal(size=(n_drugs, drug_dim))
    cell_vectors = c @ rng.normal(size=(latent, cell_dim)) + 0.1 * rng.normal(size=(n_cells, cell_dim))
    drugs = [f"D{i:02d}" for i in range(n_drugs)]
    cells = [f"C{i}" for i in range(n_cells)]
    instances = []
    for a, b in itertools.combinations(range(n_drugs), 2):
        for k in range(n_cells):
            score = 20.0 * float(np.sum(z[a] * z[b] * c[k])) + 5.0 * float((z[a] + z[b]) @ g)
            score += noise * float(rng.normal())
            # Alternate the stored order so mirroring matters.
            da, db = (drugs[a], drugs[b]) if (a + b + k) % 2 == 0 else (drugs[b], drugs[a])
            instances.append(SynergyInstance(da, db, cells[k], round(score, 6)))
    drug_table = RepresentationTable("demo_drug", tuple(drugs), np.round(drug_vectors, 6))
    cell_table = RepresentationTable("demo_cell", tuple(cells), np.round(cell_vectors, 6))
    return instances, drug_table, cell_table


def write_demo(directory, seed=0):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    instances, drugs, cells = make_synthetic(seed=seed)
    write_synergy_triples(instances, directory / "synergy.csv")
    write_representation_table(drugs, directory / "drugs.csv")
    write_representation_table(cells, directory / "cells.csv")
    lines = ["id,smiles"] + [f"{d},{s}" for d, s in zip(drugs.ids, DEMO_SMILES)]
    (directory / "structures.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")


if __name__ == "__main__":
    write_demo(sys.argv[1] if len(sys.argv) > 1 else ".")
