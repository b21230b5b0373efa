"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line which the terminal summary prints (see
``conftest.pytest_terminal_summary``), so the verdicts are visible even when
output capture is on.
"""
import subprocess
import sys
import time

import numpy as np
import pytest
from conftest import CONFIGS, DEMO
from oracles import (
    central_differences,
    exhaustive_tree_predict,
    grid_search_gamma,
    max_relative_error,
    ols,
    soft_threshold_1d,
    wilcoxon_enumeration,
)

from synergy.config import load_config
from synergy.dataio import assemble_pairs
from synergy.ensemble import BaseLearnerEntry, greedy_forward_ensemble, search_mixing_weight
from synergy.evaluation import make_folds, wilcoxon_signed_rank
from synergy.learners import (
    ElasticNetConfig,
    FcnnConfig,
    ForestConfig,
    GbmConfig,
    GnnConfig,
    TreeConfig,
    extract_gnnr,
    fit_decision_tree,
    fit_elastic_net,
    fit_gbm,
    fit_gnn,
    fit_random_forest,
)
from synergy.learners.gnn import GNN, pair_loss_and_grad, prepare_graph
from synergy.learners.neural import init_mlp, mse_loss_and_grad
from synergy.molgraph import MolecularGraph, SubgraphDictionary, parse_smiles_subset
from synergy.synthetic import make_synthetic

VERDICTS = []


def verdict(number, title, ok, detail=""):
    VERDICTS.append(f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {title}" + (f" ({detail})" if detail else ""))
    assert ok, detail


def test_01_elastic_net_oracles():
    start = time.perf_counter()
    worst_ols = worst_st = 0.0
    for seed in range(50):
        rng = np.random.default_rng(seed)
        p = int(rng.integers(1, 6))
        n = int(rng.integers(p + 2, 21))
        X = rng.normal(size=(n, p))
        y = X @ rng.normal(size=p) + rng.normal(size=n)
        m = fit_elastic_net(X, y, ElasticNetConfig(0.0, 0.5, tol=1e-14, max_sweeps=200000))
        beta, b = ols(X, y)
        worst_ols = max(worst_ols, float(np.max(np.abs(m.coef_ - beta))), abs(m.intercept_ - b))
        x1 = X[:, :1]
        strength, mixing = float(rng.uniform(0.01, 1.0)), float(rng.uniform(0.0, 1.0))
        m1 = fit_elastic_net(x1, y, ElasticNetConfig(strength, mixing))
        beta1, b1 = soft_threshold_1d(x1, y, strength, mixing)
        worst_st = max(worst_st, abs(m1.coef_[0] - beta1), abs(m1.intercept_ - b1))
    elapsed = time.perf_counter() - start
    ok = worst_ols <= 1e-6 and worst_st <= 1e-6 and elapsed < 5.0
    verdict(1, "elastic net matches OLS and soft-threshold closed forms", ok,
            f"max err OLS {worst_ols:.1e}, soft-threshold {worst_st:.1e}, {elapsed:.2f} s")


def test_02_tree_oracles():
    worst = 0.0
    forest_exact = True
    for seed in range(50):
        rng = np.random.default_rng(seed)
        p, n, depth = int(rng.integers(1, 5)), int(rng.integers(2, 33)), int(rng.integers(1, 3))
        X = np.round(rng.normal(size=(n, p)), 1)
        y = 3 * (X[:, 0] > 0) + rng.normal(size=n)
        tree = fit_decision_tree(X, y, TreeConfig(depth))
        oracle = exhaustive_tree_predict(X, y, depth)
        worst = max(worst, abs(np.mean((tree.predict(X) - y) ** 2) - np.mean((oracle(X) - y) ** 2)))
        rf = fit_random_forest(X, y, ForestConfig(1, TreeConfig(depth), feature_fraction=1.0, bootstrap=False))
        Xq = rng.normal(size=(20, p))
        forest_exact &= bool(np.array_equal(rf.predict(Xq), tree.predict(Xq)))
    verdict(2, "tree MSE equals exhaustive split oracle; degenerate forest equals tree",
            worst <= 1e-9 and forest_exact, f"max MSE gap {worst:.1e}, forest bit-exact {forest_exact}")


def _gnn_gradient_error():
    rng = np.random.default_rng(0)
    mols = [parse_smiles_subset(s) for s in ("CC(=O)N", "C1CCOC1")]
    model = GNN(GnnConfig(embed_dim=4, radius=1, layers=2, head=FcnnConfig(hidden=(5, 4)), epochs=1))
    model.dictionary_ = SubgraphDictionary(1)
    graphs = [prepare_graph(g, model.dictionary_) for g in mols]
    params = model.init_params(model.dictionary_.n_types, 2, rng)
    ia, ib = np.array([0, 1]), np.array([1, 0])
    cells, y = rng.normal(size=(2, 2)), rng.normal(size=2)
    _, analytic = pair_loss_and_grad(params, 2, graphs, ia, ib, cells, y)
    numeric = central_differences(lambda: pair_loss_and_grad(params, 2, graphs, ia, ib, cells, y)[0], params)
    return max_relative_error(analytic, numeric)


def test_03_gradient_checks():
    start = time.perf_counter()
    rng = np.random.default_rng(0)
    params = init_mlp((3, 5, 4, 1), rng)
    X, y = rng.normal(size=(8, 3)), rng.normal(size=8)
    _, analytic = mse_loss_and_grad(params, X, y)
    numeric = central_differences(lambda: mse_loss_and_grad(params, X, y)[0], params)
    fcnn_err = max_relative_error(analytic, numeric)
    gnn_err = _gnn_gradient_error()
    elapsed = time.perf_counter() - start
    verdict(3, "FCNN 3-5-4-1 and GNN (d=4, L=2) gradients match central differences",
            fcnn_err < 1e-4 and gnn_err < 1e-4 and elapsed < 30,
            f"rel err FCNN {fcnn_err:.1e}, GNN {gnn_err:.1e}, {elapsed:.2f} s")


def test_04_gbm_monotone():
    violations = 0
    for seed in range(10):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(80, 6))
        y = 4 * np.sin(X[:, 0]) + X[:, 1] * X[:, 2] + rng.normal(size=80)
        h = fit_gbm(X, y, GbmConfig(100, 0.1, TreeConfig(3))).train_mse_
        violations += sum(b > a for a, b in zip(h, h[1:]))
    verdict(4, "GBM training MSE non-increasing over 100 stages, no tolerance", violations == 0,
            f"{violations} increases across 10 datasets")


def test_05_wilcoxon_exact():
    mismatches = 0
    for n in range(1, 11):
        for seed in range(20):
            rng = np.random.default_rng(1000 * n + seed)
            a = np.round(rng.normal(size=n) * 2, 0 if seed % 2 else 3)
            b = np.round(rng.normal(size=n) * 2, 0 if seed % 2 else 3)
            if np.all(a == b):
                b[0] += 1.0
            mismatches += wilcoxon_signed_rank(a, b) != wilcoxon_enumeration(a, b)
    w, p = wilcoxon_signed_rank([0.3, 1.1, 2.0, 4.5, 0.9], np.zeros(5))
    verdict(5, "exact Wilcoxon p equals 2^n enumeration for n <= 10; n=5 all positive gives 0.0625",
            mismatches == 0 and w == 0 and p == 0.0625, f"{mismatches} mismatches of 200, n=5 p={p}")


def test_06_cv_integrity():
    instances, drugs, cells = make_synthetic()
    ds = assemble_pairs(instances, drugs, cells)
    n = len(instances)
    pairs = {i.pair_id for i in instances}
    sizes_ok = (len(pairs), n, len(ds)) == (66, 198, 396)
    bad = 0
    for seed in range(100):
        plan = make_folds(instances, 5, seed)
        row_fold = np.array([plan.fold_of(m.pair_id) for m in ds.row_meta])
        seen = {}
        for meta, f in zip(ds.row_meta, row_fold):
            if seen.setdefault(meta.pair_id, f) != f:
                bad += 1
        bad += int(np.sum(row_fold[:n] != row_fold[n:]))
        for fold in range(5):
            test = {m.pair_id for m, f in zip(ds.row_meta, row_fold) if f == fold}
            train = {m.pair_id for m, f in zip(ds.row_meta, row_fold) if f != fold}
            bad += len(test & train)
    verdict(6, "no pair straddles folds and mirrored rows share a fold in 100 plans", sizes_ok and bad == 0,
            f"66 pairs/198 instances/396 rows: {sizes_ok}, violations {bad}")


def _replay_with_oracle(entries, y, step=0.005, rel_tol=1e-4):
    """Greedy cascade driven by the brute-force grid; also checks each search call."""
    scored = sorted(((float(np.mean((e.val_predictions - y) ** 2)), e.id, e.val_predictions) for e in entries),
                    key=lambda t: (t[0], t[1]))
    cur_mse, _, current = scored[0]
    members, weights, agree = [scored[0][1]], [1.0], True
    for _, member_id, pred in scored[1:]:
        gamma, new_mse = grid_search_gamma(current, pred, y, step)
        agree &= search_mixing_weight(current, pred, y, step) == (gamma, new_mse)
        if gamma <= 0 or cur_mse <= 0 or (cur_mse - new_mse) / cur_mse < rel_tol:
            break
        weights = [w * (1 - gamma) for w in weights] + [gamma]
        members.append(member_id)
        current = (1 - gamma) * current + gamma * pred
        cur_mse = new_mse
    total = sum(weights)
    return tuple(members), tuple(w / total for w in weights), agree


def test_07_ensemble_dominance():
    instances, drugs, cells = make_synthetic()
    y = assemble_pairs(instances, drugs, cells).targets
    dominated = grid_agrees = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        scale = np.std(y)
        entries = [BaseLearnerEntry(name, y + rng.normal(size=len(y)) * scale * s + rng.normal() * s)
                   for name, s in (("low", 0.3), ("mid", 0.6), ("high", 1.0))]
        model = greedy_forward_ensemble(entries, y)
        best = min(float(np.mean((e.val_predictions - y) ** 2)) for e in entries)
        dominated += model.val_mse <= best
        members, weights, agree = _replay_with_oracle(entries, y)
        grid_agrees += agree and members == model.member_ids and np.allclose(weights, model.weights, rtol=0,
                                                                             atol=1e-15)
    verdict(7, "greedy ensemble never worse than best member; gamma equals brute-force grid minimum",
            dominated == 100 and grid_agrees == 100, f"dominance {dominated}/100, grid agreement {grid_agrees}/100")


def test_08_cv_smoke(tmp_path):
    outputs = []
    elapsed = []
    codes = []
    for name in ("a", "b"):
        start = time.perf_counter()
        proc = subprocess.run(
            [sys.executable, "-m", "synergy", "cv", "--config", str(DEMO / "demo_cv.cfg"), "--out",
             str(tmp_path / name), "--threads", "1"],
            capture_output=True, text=True,
        )
        elapsed.append(time.perf_counter() - start)
        codes.append(proc.returncode)
        outputs.append((tmp_path / name / "report.csv").read_bytes() if proc.returncode == 0 else b"")
    rows = len(outputs[0].decode().splitlines()) - 2
    ok = codes == [0, 0] and max(elapsed) < 60 and outputs[0] == outputs[1] and rows == 5
    verdict(8, "cv on the bundled depth-2 GBM demo: exit 0, < 60 s, byte-identical rerun", ok,
            f"exit {codes}, {max(elapsed):.1f} s, identical {outputs[0] == outputs[1]}, {rows} fold rows")


def _random_molecule(rng):
    n = int(rng.integers(3, 13))
    atoms = tuple(str(rng.choice(["C", "C", "C", "N", "O", "S", "Cl"])) for _ in range(n))
    bonds = {(int(rng.integers(0, v)), v) for v in range(1, n)}
    for _ in range(int(rng.integers(0, 3))):
        u, v = sorted(int(x) for x in rng.choice(n, size=2, replace=False))
        bonds.add((u, v))
    return MolecularGraph(atoms, tuple((u, v, int(rng.choice([1, 1, 1, 2, 3]))) for u, v in sorted(bonds)))


def test_09_gnnr_permutation_invariance():
    rng = np.random.default_rng(2024)
    mols = [_random_molecule(rng) for _ in range(10)]
    pairs = [(mols[i], mols[(i + 1) % 10]) for i in range(10)]
    cfg = GnnConfig(embed_dim=25, radius=2, layers=3, head=FcnnConfig(hidden=(16, 8), learning_rate=1e-3),
                    epochs=2)
    model = fit_gnn(pairs, rng.normal(size=(10, 3)), rng.normal(size=10) * 10, cfg)
    mismatches = 0
    for g in mols:
        base = extract_gnnr(model, g)
        for _ in range(100):
            mismatches += not np.array_equal(extract_gnnr(model, g.relabel(list(rng.permutation(g.n_atoms)))), base)
    verdict(9, "GNNR identical under 100 vertex relabelings of 10 molecules", mismatches == 0,
            f"{mismatches} of 1000 differ")


def test_10_config_echo():
    fc = load_config(CONFIGS / "cdr_fcnn.cfg", check_paths=False).model_config
    gb = [load_config(CONFIGS / n, check_paths=False).model_config for n in ("cdr_gb.cfg", "chemr_gb.cfg")]
    gn = load_config(CONFIGS / "gnnr_fcnn.cfg", check_paths=False).model_config
    checks = {
        "FCNN E=455 H=(3000,1500) D=0.4": (fc.epochs, fc.hidden, fc.dropout) == (455, (3000, 1500), 0.4),
        "GB M=6 T=0.05": all((g.tree.max_depth, g.learning_rate) == (6, 0.05) for g in gb),
        "GNN E=1000 r=2 d=25 L=3 H=(3000,1500)":
            (gn.epochs, gn.radius, gn.embed_dim, gn.layers, gn.head.hidden) == (1000, 2, 25, 3, (3000, 1500)),
    }
    failed = [k for k, v in checks.items() if not v]
    verdict(10, "shipped configs echo the reference hyperparameters", not failed,
            "all match" if not failed else "mismatch: " + "; ".join(failed))


@pytest.fixture(autouse=True, scope="module")
def _clear():
    VERDICTS.clear()
    yield
