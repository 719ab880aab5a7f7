"""Pairwise-nearest-neighbour merging and the seeders built on it.

``pnn_reduce`` keeps, for every live cluster, its cheapest merge partner.
After a merge only the merged cluster and the clusters that pointed at one
of the two merged clusters need a fresh scan; everybody else just checks
whether the merged cluster became their new cheapest partner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np

from . import _kernels as K
from .core import (Configuration, Dataset, DistanceLedger, RngStream, WeightedCentroidSet,
                   assigned_configuration)
from .lloyd import run_lloyd
from .seeding import SeederSpec, SeedingResult, parse_seeder

# nn-table maintenance goes parallel over live clusters from this many on
PARALLEL_FROM = 500


def merge_cost(c_a, z_a, c_b, z_b, ledger: DistanceLedger) -> float:
    """SSE increase from merging two clusters of sizes z_a, z_b."""
    ledger.add(1)
    return float(K.merge_delta(np.asarray(c_a, dtype=np.float64), float(z_a),
                               np.asarray(c_b, dtype=np.float64), float(z_b)))


@dataclass
class MergeState:
    centroids: np.ndarray
    weights: np.ndarray  # float64 copy of the integer weights, as the kernels take it
    nn: np.ndarray
    nn_cost: np.ndarray
    alive: np.ndarray

    @classmethod
    def build(cls, wset: WeightedCentroidSet, ledger: DistanceLedger) -> "MergeState":
        C = wset.centroids.copy()
        w = wset.weights.astype(np.float64)
        m = C.shape[0]
        nn = np.empty(m, dtype=np.int64)
        cost = np.empty(m)
        ledger.add(K.pnn_table(C, w, nn, cost))
        return cls(C, w, nn, cost, np.ones(m, dtype=np.bool_))

    @property
    def n_alive(self) -> int:
        return int(self.alive.sum())

    def cheapest_pair(self):
        live = np.flatnonzero(self.alive)
        a = int(live[np.argmin(self.nn_cost[live])])
        b = int(self.nn[a])
        return (a, b) if a < b else (b, a)

    def to_set(self) -> WeightedCentroidSet:
        keep = self.alive
        return WeightedCentroidSet(self.centroids[keep], np.rint(self.weights[keep]).astype(np.int64))


def merge_pair(state: MergeState, a: int, b: int, ledger: DistanceLedger) -> MergeState:
    """Merge clusters a and b in place (the higher index dies) and repair the nn table."""
    if a == b or not (state.alive[a] and state.alive[b]):
        raise ValueError("merge_pair needs two distinct live clusters")
    if b < a:
        a, b = b, a
    C, w, nn, cost, alive = state.centroids, state.weights, state.nn, state.nn_cost, state.alive
    za, zb = w[a], w[b]
    C[a] = (za * C[a] + zb * C[b]) / (za + zb)
    w[a] = za + zb
    alive[b] = False
    stale = [c for c in np.flatnonzero(alive) if c != a and nn[c] in (a, b)]
    best, best_v, count = -1, np.inf, 0
    for c in np.flatnonzero(alive):
        if c == a:
            continue
        v = K.merge_delta(C[a], w[a], C[c], w[c])
        count += 1
        if v < best_v:
            best, best_v = c, v
        if v < cost[c] or (v == cost[c] and a < nn[c]):
            cost[c], nn[c] = v, a
    nn[a], cost[a] = best, best_v
    for c in stale:
        count += K.pnn_scan(C, w, alive, c, nn, cost)
    ledger.add(count)
    return state


def pnn_reduce(wset: WeightedCentroidSet, target_k: int, ledger: DistanceLedger,
               threads: int = 1, return_merges: bool = False):
    """Greedily merge the globally cheapest pair until ``target_k`` clusters remain.

    Ties on the merge cost go to the lexicographically lowest pair (a, b).
    With ``return_merges`` also returns the (m - target_k) x 2 merge trace.
    """
    m = wset.m
    if not 1 <= target_k <= m:
        raise ValueError(f"cannot reduce {m} centroids to {target_k}")
    merges = np.empty((m - target_k, 2), dtype=np.int64)
    if m == target_k:
        out = WeightedCentroidSet(wset.centroids.copy(), wset.weights.copy())
        return (out, merges) if return_merges else out
    state = MergeState.build(wset, ledger)
    args = (state.centroids, state.weights, state.alive, state.nn, state.nn_cost, target_k, merges)
    if threads > 1 and m > PARALLEL_FROM:
        previous = numba.get_num_threads()
        numba.set_num_threads(min(threads, numba.config.NUMBA_NUM_THREADS))
        try:
            count = K.pnn_reduce_parallel(*args, PARALLEL_FROM)
        finally:
            numba.set_num_threads(previous)
    else:
        count = K.pnn_reduce_serial(*args, m + 1)
    ledger.add(count)
    out = state.to_set()
    return (out, merges) if return_merges else out


def seed_pnn(data: Dataset, k: int, ledger: DistanceLedger, threads: int = 1) -> Configuration:
    if not 1 <= k <= data.n:
        raise ValueError(f"k={k} must lie in [1, N={data.n}]")
    singletons = WeightedCentroidSet(data.points, np.ones(data.n, dtype=np.int64))
    reduced = pnn_reduce(singletons, k, ledger, threads)
    return assigned_configuration(data, reduced.centroids, ledger, threads)


@dataclass
class SplitPlan:
    subset_of: np.ndarray

    @property
    def j(self) -> int:
        return int(self.subset_of.max()) + 1

    def members(self, s: int) -> np.ndarray:
        return np.flatnonzero(self.subset_of == s)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.subset_of)


def split_evenly(n: int, j: int, rng: Optional[RngStream]) -> SplitPlan:
    """Random split of n indices into j subsets whose sizes differ by at most one."""
    if not 1 <= j <= n:
        raise ValueError(f"cannot split {n} points into {j} subsets")
    q, r = divmod(n, j)
    quotas = np.full(j, q, dtype=np.int64)
    quotas[:r] += 1
    labels = np.repeat(np.arange(j, dtype=np.int64), quotas)
    if j > 1:
        rng.shuffle(labels)
    return SplitPlan(labels)


def compute_J(n: int, k: int, rho: float) -> int:
    """Number of subsets: ceil(sqrt(rho*n/(2k))), capped at floor(n/k)."""
    if not 1 <= k <= n:
        raise ValueError("need n >= k >= 1")
    if not rho > 0:
        raise ValueError("rho must be positive")
    root = math.sqrt(rho * n / (2.0 * k))
    # absorb rounding so that rho = 2k/n gives exactly 1 and rho = 2n/k gives n/k
    j = math.ceil(root * (1.0 - 1e-12))
    return max(1, min(j, n // k))


def default_refine_J(n: int, k: int) -> int:
    return 10 if n > 10 * k else max(1, min(5, n // k))


def _as_spec(spec) -> SeederSpec:
    return parse_seeder(spec) if isinstance(spec, str) else spec


def _cluster_subsets(data, k, inner, plan, rng, ledger, accel, threads):
    """Seed and fully optimise each subset; returns Lloyd outcomes in subset order."""
    from .seeding import seed

    j = plan.j
    streams = [rng] if j == 1 else rng.spawn(j)
    outcomes = []
    for s in range(j):
        sub = data if j == 1 else data.subset(plan.members(s))
        start = seed(sub, k, inner, streams[s], ledger, accel=accel, threads=threads).config
        outcomes.append(run_lloyd(sub, start, accel, ledger, threads=threads))
    return outcomes


def seed_pnns(data: Dataset, k: int, inner, rho: float, rng: RngStream, ledger: DistanceLedger,
              accel="naive", threads: int = 1, detailed: bool = False):
    """PNN-smoothing seeding around the seeder ``inner``.

    Splits the data into J random subsets, clusters each one with ``inner``
    plus Lloyd, pools the J*k centroids weighted by their cluster sizes,
    merges the pool down to k centroids and recomputes the partition.
    """
    inner = _as_spec(inner)
    if inner.contains("pnns"):
        raise ValueError("pnns cannot be nested")
    if not 1 <= k <= data.n:
        raise ValueError(f"k={k} must lie in [1, N={data.n}]")
    j = compute_J(data.n, k, rho)
    plan = split_evenly(data.n, j, rng)
    outcomes = _cluster_subsets(data, k, inner, plan, rng, ledger, accel, threads)
    cents = np.concatenate([o.config.centroids for o in outcomes])
    weights = np.concatenate([o.config.sizes for o in outcomes])
    keep = weights > 0
    pool = WeightedCentroidSet(cents[keep], weights[keep])
    assert pool.total_weight == data.n
    merged = pnn_reduce(pool, k, ledger, threads)
    config = assigned_configuration(data, merged.centroids, ledger, threads)
    if detailed:
        return SeedingResult(config, [o.iterations for o in outcomes], j)
    return config


def seed_refine(data: Dataset, k: int, inner, j: Optional[int], rng: RngStream,
                ledger: DistanceLedger, accel="naive", threads: int = 1, detailed: bool = False):
    """Bradley-Fayyad refinement around the seeder ``inner``.

    The J subset solutions are pooled into a J*k point dataset, which is
    clustered J times, each time starting from one of the subset solutions;
    the run with the lowest pooled cost wins and its partition is recomputed
    over the full data.
    """
    inner = _as_spec(inner)
    if inner.contains("pnns"):
        raise ValueError("pnns cannot be nested")
    if j is None:
        j = default_refine_J(data.n, k)
    if j < 1 or j * k > data.n:
        raise ValueError(f"refine needs 1 <= J <= N/k, got J={j} with N={data.n}, k={k}")
    plan = split_evenly(data.n, j, rng)
    outcomes = _cluster_subsets(data, k, inner, plan, rng, ledger, accel, threads)
    pool = Dataset(np.concatenate([o.config.centroids for o in outcomes]))
    best, best_cost = None, np.inf
    for o in outcomes:
        start = assigned_configuration(pool, o.config.centroids, ledger)
        res = run_lloyd(pool, start, accel, ledger, threads=threads)
        if res.sse < best_cost:
            best, best_cost = res, res.sse
    config = assigned_configuration(data, best.config.centroids, ledger, threads)
    if detailed:
        return SeedingResult(config, [o.iterations for o in outcomes], j)
    return config
