"""Deliberately naive reference implementations used as test oracles.

Nothing here imports the package's kernels; each function restates the
definition with plain Python loops.
"""

from __future__ import annotations

import math

import numpy as np


def ued_direct(a, da, b, db, normalize=False):
    value = 0.0
    unc = 0.0
    for x, dx, y, dy in zip(a, da, b, db):
        value += (x - y) ** 2
        unc += abs(x - y) * (dx + dy)
    unc *= 2.0
    if normalize:
        value /= len(a)
        unc /= len(a)
    return value, unc


def window_scan(s, ds, t, dt, eps, normalize=True):
    """(value, uncertainty, position, count) by enumerating every window."""
    l = len(s)
    best = None
    count = 0
    for p in range(len(t) - l + 1):
        v, u = ued_direct(s, ds, t[p:p + l], dt[p:p + l], normalize)
        if v <= eps:
            count += 1
        key = (v, u, p)
        if best is None or key < best:
            best = key
    return best[0], best[1], best[2], count


def naive_dedup(candidates, eps, normalize=True):
    """Quadratic all-pairs greedy filter: (dimension, length, values) triples in scan order."""
    kept = []
    for i, (dim, vals) in enumerate(candidates):
        similar = False
        for j in kept:
            dj, vj = candidates[j]
            if dj != dim or len(vj) != len(vals):
                continue
            d = sum((x - y) ** 2 for x, y in zip(vals, vj))
            if normalize:
                d /= len(vals)
            if d <= eps:
                similar = True
                break
        if not similar:
            kept.append(i)
    return kept


def refit_loo(X, Y, alpha):
    """Mean squared leave-one-out residual by n explicit ridge refits (unpenalized intercept)."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    n = X.shape[0]
    sq = []
    for i in range(n):
        keep = np.arange(n) != i
        Xt, Yt = X[keep], Y[keep]
        xm, ym = Xt.mean(axis=0), Yt.mean(axis=0)
        A = (Xt - xm).T @ (Xt - xm) + alpha * np.eye(X.shape[1])
        W = np.linalg.solve(A, (Xt - xm).T @ (Yt - ym))
        pred = (X[i] - xm) @ W + ym
        sq.extend(((Y[i] - pred) ** 2).tolist())
    return float(np.mean(sq))


def log_loss_direct(y_idx, proba, clip=1e-15):
    total = 0.0
    for y, row in zip(y_idx, proba):
        p = min(max(row[y], clip), 1 - clip)
        total -= math.log(p)
    return total / len(y_idx)


def impute_direct(values, window=5):
    """Jacobi-style rolling fill with population std, written with loops."""
    vals = list(values)
    uncs = [0.0 if v is not None else None for v in vals]
    half = window // 2
    while any(v is None for v in vals):
        new_v, new_u = list(vals), list(uncs)
        for i, v in enumerate(vals):
            if v is not None:
                continue
            near = [vals[j] for j in range(max(0, i - half), min(len(vals), i + half + 1)) if vals[j] is not None]
            if near:
                mu = sum(near) / len(near)
                new_v[i] = mu
                new_u[i] = math.sqrt(sum((x - mu) ** 2 for x in near) / len(near))
        vals, uncs = new_v, new_u
    return vals, uncs
