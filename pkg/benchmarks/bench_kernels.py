"""Compiled vs numpy kernels on the two hot loops.

    python3 benchmarks/bench_kernels.py [--rows N] [--features P] [--repeat R]

Each kernel is timed on identical inputs with both implementations and the
results are checked for agreement before timings are printed.
"""
import argparse
import time

import numpy as np

from synergy import _fallback

try:
    from synergy import _core
except ImportError:  # extension not built
    _core = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def bench_best_split(rows, features, repeat):
    rng = np.random.default_rng(0)
    X = np.round(rng.normal(size=(rows, features)), 2)
    y = X[:, 0] * 3 + rng.normal(size=rows)
    samples = np.arange(rows, dtype=np.intp)
    feats = np.arange(features, dtype=np.intp)
    impls = {"python": _fallback, "compiled": _core}
    out = {}
    for name, mod in impls.items():
        if mod is None:
            continue
        result = mod.best_split(X, y, samples, feats, 1)
        out[name] = (best_of(lambda: mod.best_split(X, y, samples, feats, 1), repeat), result)
    return out


def bench_small_nodes(rows, features, repeat):
    """Many calls on 40-row nodes, the common case deep inside a tree."""
    rng = np.random.default_rng(2)
    X = np.round(rng.normal(size=(rows, features)), 2)
    y = rng.normal(size=rows)
    nodes = [np.sort(rng.choice(rows, size=40, replace=False)).astype(np.intp) for _ in range(500)]
    feats = np.arange(min(features, 20), dtype=np.intp)
    out = {}
    for name, mod in (("python", _fallback), ("compiled", _core)):
        if mod is None:
            continue

        def run():
            return [mod.best_split(X, y, idx, feats, 1) for idx in nodes]

        out[name] = (best_of(run, repeat), run())
    return out


def bench_cd(rows, features, repeat):
    rng = np.random.default_rng(1)
    X = rng.normal(size=(rows, features))
    Xc = np.asfortranarray(X - X.mean(axis=0))
    y = Xc @ rng.normal(size=features) + rng.normal(size=rows)
    col_sq = (Xc * Xc).sum(axis=0) / rows
    out = {}
    for name, mod in (("python", _fallback), ("compiled", _core)):
        if mod is None:
            continue

        def run():
            beta = np.zeros(features)
            resid = y - y.mean()
            mod.cd_sweeps(Xc, beta, resid, col_sq, 0.01, 0.01, 1e-10, 200)
            return beta

        out[name] = (best_of(run, repeat), run())
    return out


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rows", type=int, default=5000)
    parser.add_argument("--features", type=int, default=100)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    if _core is None:
        print("compiled extension not available; timing the numpy fallback only")

    print(f"{'kernel':<12}{'python (s)':>12}{'compiled (s)':>14}{'speedup':>10}")
    for label, bench, same in (
        ("best_split", bench_best_split, lambda a, b: a == b),
        ("small_nodes", bench_small_nodes, lambda a, b: a == b),
        ("cd_sweeps", bench_cd, lambda a, b: np.allclose(a, b, rtol=0, atol=1e-9)),
    ):
        res = bench(args.rows, args.features, args.repeat)
        py_t = res["python"][0]
        if "compiled" in res:
            c_t = res["compiled"][0]
            if not same(res["python"][1], res["compiled"][1]):
                raise SystemExit(f"{label}: implementations disagree")
            print(f"{label:<12}{py_t:>12.4f}{c_t:>14.4f}{py_t / c_t:>9.1f}x")
        else:
            print(f"{label:<12}{py_t:>12.4f}{'-':>14}{'-':>10}")


if __name__ == "__main__":
    main()
