"""Numpy implementations of the compiled kernels in ``_core.pyx``.

``best_split`` reproduces the compiled scan bit for bit (sequential prefix
sums, identical score expression); ``cd_sweeps`` agrees to rounding only,
since numpy dot products do not accumulate sequentially.
"""
import math

import numpy as np


def best_split(X, y, samples, features, min_leaf):
    n = len(samples)
    best_feat, best_thr, best_score = -1, 0.0, -math.inf
    if n < 2:
        return best_feat, best_thr, best_score
    nl = np.arange(1, n, dtype=np.float64)
    nr = n - nl
    size_ok = (nl >= min_leaf) & (nr >= min_leaf)
    ysub = y[samples]
    for f in features:
        vals = X[samples, f]
        order = np.argsort(vals, kind="stable")
        vs = vals[order]
        csum = np.cumsum(ysub[order])
        sl = csum[:-1]
        sr = csum[-1] - sl
        valid = size_ok & (vs[:-1] < vs[1:])
        if not valid.any():
            continue
        score = np.where(valid, sl * sl / nl + sr * sr / nr, -np.inf)
        i = int(np.argmax(score))
        if score[i] > best_score:
            best_score = float(score[i])
            best_feat = int(f)
            thr = 0.5 * (vs[i] + vs[i + 1])
            if thr >= vs[i + 1]:
                thr = vs[i]
            best_thr = float(thr)
    return best_feat, best_thr, best_score


def cd_sweeps(X, beta, resid, col_sq, l1, l2, tol, max_sweeps):
    n, p = X.shape
    for sweep in range(max_sweeps):
        max_change = 0.0
        for j in range(p):
            if col_sq[j] == 0.0:
                continue
            old = beta[j]
            rho = float(X[:, j] @ resid) / n + col_sq[j] * old
            if rho > l1:
                new = (rho - l1) / (col_sq[j] + l2)
            elif rho < -l1:
                new = (rho + l1) / (col_sq[j] + l2)
            else:
                new = 0.0
            delta = new - old
            if delta != 0.0:
                resid -= X[:, j] * delta
                beta[j] = new
                max_change = max(max_change, abs(delta))
        if max_change < tol:
            return sweep + 1
    return max_sweeps
