"""Slow reference implementations used to cross-check the fast paths."""

import numpy as np


def brute_assign(X, C):
    """Nearest centroid by explicit double loop, lowest index on ties."""
    X = np.asarray(X, float)
    C = np.asarray(C, float)
    assignment = np.empty(len(X), dtype=np.int64)
    costs = np.empty(len(X))
    for i, x in enumerate(X):
        best, bd = 0, None
        for j, c in enumerate(C):
            d = 0.0
            for t in range(len(x)):
                d += (x[t] - c[t]) * (x[t] - c[t])
            if bd is None or d < bd:
                best, bd = j, d
        assignment[i] = best
        costs[i] = bd
    return assignment, costs


def _delta(ca, za, cb, zb):
    d = 0.0
    for t in range(len(ca)):
        diff = ca[t] - cb[t]
        d += diff * diff
    return za * zb * d / (za + zb)


def naive_pnn(centroids, weights, target):
    """Greedy merging that rebuilds the whole cost matrix after every merge.

    Returns (merge list [(a, b), ...], final centroids, final weights) with
    the same tie rule as the fast path: lexicographically lowest (a, b).
    """
    C = [np.array(c, dtype=float) for c in centroids]
    w = [float(z) for z in weights]
    alive = list(range(len(C)))
    merges = []
    while len(alive) > target:
        best, pair = None, None
        for ia, a in enumerate(alive):
            for b in alive[ia + 1:]:
                v = _delta(C[a], w[a], C[b], w[b])
                if best is None or v < best:
                    best, pair = v, (a, b)
        a, b = pair
        merges.append(pair)
        C[a] = (w[a] * C[a] + w[b] * C[b]) / (w[a] + w[b])
        w[a] = w[a] + w[b]
        alive.remove(b)
    return merges, np.array([C[a] for a in alive]), np.array([w[a] for a in alive])
